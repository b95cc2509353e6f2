#include "scanmap/registration.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <stdexcept>

#include "scanmap/parallel.hpp"

namespace scanmap {

RigidTransform bestRigidTransform(const std::vector<Vec3>& sourcePts,
                                  const std::vector<Vec3>& targetPts) {
  if (sourcePts.size() != targetPts.size()) {
    throw std::invalid_argument("bestRigidTransform: size mismatch");
  }
  const std::size_t n = sourcePts.size();
  if (n < 3) throw std::invalid_argument("bestRigidTransform: need at least 3 pairs");

  Vec3 srcMean = Vec3::Zero(), dstMean = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    srcMean += sourcePts[i];
    dstMean += targetPts[i];
  }
  srcMean /= static_cast<double>(n);
  dstMean /= static_cast<double>(n);

  Mat3 cross = Mat3::Zero();
  double srcSpread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 ps = sourcePts[i] - srcMean;
    cross += ps * (targetPts[i] - dstMean).transpose();
    srcSpread += ps.squaredNorm();
  }

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3& sv = svd.singularValues();
  // collinear or coincident input leaves the rotation underdetermined
  if (srcSpread <= 0.0 || sv(1) <= 1e-12 * std::max(sv(0), 1e-300)) {
    throw std::invalid_argument("bestRigidTransform: degenerate (rank-deficient) input");
  }

  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;  // reject reflections
  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = dstMean - t.rotation * srcMean;
  return t;
}

CorrespondenceSet findCorrespondences(const PointCloud& source, const SpatialIndex& targetIndex,
                                      const RigidTransform& transform, double maxDistance) {
  CorrespondenceSet set;
  set.maxDistance = maxDistance;
  if (targetIndex.size() == 0) return set;

  std::vector<std::optional<Correspondence>> slots(source.size());
  parallelFor(source.size(), [&](std::size_t i) {
    Vec3 p = transform.apply(source.points[i]);
    auto nn = targetIndex.knn(p, 1);
    if (!nn.empty() && nn[0].distance <= maxDistance) {
      slots[i] = Correspondence{static_cast<int>(i), nn[0].index, nn[0].distance};
    }
  });
  set.pairs.reserve(source.size());
  for (const auto& s : slots) {
    if (s) set.pairs.push_back(*s);
  }
  return set;
}

double fitnessScore(const PointCloud& source, const SpatialIndex& targetIndex,
                    const RigidTransform& transform, double maxDistance) {
  if (source.empty() || targetIndex.size() == 0) {
    return std::numeric_limits<double>::infinity();
  }
  std::vector<double> sq(source.size(), -1.0);
  parallelFor(source.size(), [&](std::size_t i) {
    Vec3 p = transform.apply(source.points[i]);
    auto nn = targetIndex.knn(p, 1);
    if (!nn.empty() && nn[0].distance <= maxDistance) {
      sq[i] = nn[0].distance * nn[0].distance;
    }
  });
  double sum = 0.0;
  std::size_t accepted = 0;
  for (double v : sq) {
    if (v >= 0.0) {
      sum += v;
      ++accepted;
    }
  }
  if (accepted == 0) return std::numeric_limits<double>::infinity();
  return sum / static_cast<double>(accepted);
}

IcpResult icp(const PointCloud& source, const SpatialIndex& targetIndex,
              const RigidTransform& initialGuess, const IcpParams& params) {
  if (source.empty()) throw std::invalid_argument("icp: empty source cloud");

  IcpResult result;
  result.transform = initialGuess;

  for (int iter = 0; iter < params.maxIterations; ++iter) {
    CorrespondenceSet corr =
        findCorrespondences(source, targetIndex, result.transform, params.maxCorrespondenceDistance);
    if (corr.pairs.empty()) {
      result.iterationsUsed = iter;
      result.converged = false;
      result.fitness = std::numeric_limits<double>::infinity();
      return result;
    }

    IcpIterationStats stats;
    stats.correspondences = static_cast<int>(corr.pairs.size());
    std::vector<Vec3> src, dst;
    src.reserve(corr.pairs.size());
    dst.reserve(corr.pairs.size());
    for (const auto& c : corr.pairs) {
      src.push_back(source.points[c.sourceIndex]);
      dst.push_back(targetIndex.points()[c.targetIndex]);
      stats.objectiveBefore += c.distance * c.distance;
    }

    RigidTransform updated;
    try {
      updated = bestRigidTransform(src, dst);
    } catch (const std::invalid_argument&) {
      // correspondence geometry collapsed; keep the last pose
      result.iterationsUsed = iter;
      result.converged = false;
      break;
    }

    for (std::size_t i = 0; i < src.size(); ++i) {
      stats.objectiveAfter += (updated.apply(src[i]) - dst[i]).squaredNorm();
    }

    RigidTransform delta = compose(updated, invert(result.transform));
    result.transform = updated.orthonormalized();
    result.history.push_back(stats);
    result.iterationsUsed = iter + 1;

    if (delta.translation.norm() < params.translationEpsilon &&
        rotationAngle(delta.rotation) < params.rotationEpsilon) {
      result.converged = true;
      break;
    }
  }

  result.fitness = fitnessScore(source, targetIndex, result.transform, params.fitnessMaxDistance);
  return result;
}

LocalPlane fitLocalPlane(const SpatialIndex& index, const Vec3& query, int k, double maxPlaneDistance) {
  LocalPlane plane;
  auto nbrs = index.knn(query, k);
  if (nbrs.size() < 3) return plane;

  Vec3 centroid = Vec3::Zero();
  for (const auto& nb : nbrs) centroid += index.points()[nb.index];
  centroid /= static_cast<double>(nbrs.size());

  Mat3 cov = Mat3::Zero();
  for (const auto& nb : nbrs) {
    Vec3 d = index.points()[nb.index] - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3& evals = eig.eigenvalues();
  if (evals[2] <= 0.0 || evals[1] <= 1e-10 * evals[2]) {
    return plane;  // collinear or coincident neighborhood
  }

  plane.centroid = centroid;
  plane.normal = eig.eigenvectors().col(0).normalized();
  for (const auto& nb : nbrs) {
    if (std::abs(plane.signedDistance(index.points()[nb.index])) > maxPlaneDistance) {
      return plane;  // neighborhood spans an edge or corner
    }
  }
  plane.valid = true;
  return plane;
}

std::vector<PlaneConstraint> buildPlaneConstraints(const PointCloud& scan, const SpatialIndex& mapIndex,
                                                   const RigidTransform& transform, int k,
                                                   double maxPlaneDistance,
                                                   double maxCorrespondenceDistance) {
  std::vector<std::optional<PlaneConstraint>> slots(scan.size());
  parallelFor(scan.size(), [&](std::size_t i) {
    Vec3 p = transform.apply(scan.points[i]);
    auto nn = mapIndex.knn(p, 1);
    if (nn.empty() || nn[0].distance > maxCorrespondenceDistance) return;
    LocalPlane plane = fitLocalPlane(mapIndex, p, k, maxPlaneDistance);
    if (!plane.valid) return;
    slots[i] = PlaneConstraint{scan.points[i], plane.centroid, plane.normal};
  });
  std::vector<PlaneConstraint> out;
  out.reserve(scan.size());
  for (const auto& s : slots) {
    if (s) out.push_back(*s);
  }
  return out;
}

PlaneObjective evaluatePlaneObjective(const std::vector<PlaneConstraint>& constraints,
                                      const RigidTransform& transform) {
  PlaneObjective obj;
  for (const auto& c : constraints) {
    Vec3 moved = transform.apply(c.sourcePoint);
    double r = c.planeNormal.dot(moved - c.planeCentroid);
    obj.value += r * r;
    obj.gradient.head<3>() += 2.0 * r * c.planeNormal;
    obj.gradient.tail<3>() += 2.0 * r * moved.cross(c.planeNormal);
  }
  return obj;
}

IcpResult pointToPlaneRefine(const PointCloud& scan, const SpatialIndex& mapIndex,
                             const RigidTransform& initial, const PointToPlaneParams& params) {
  if (scan.empty()) throw std::invalid_argument("pointToPlaneRefine: empty scan");

  IcpResult result;
  result.transform = initial;

  for (int iter = 0; iter < params.icp.maxIterations; ++iter) {
    auto constraints =
        buildPlaneConstraints(scan, mapIndex, result.transform, params.planeNeighbors,
                              params.maxPlaneDistance, params.icp.maxCorrespondenceDistance);
    if (static_cast<int>(constraints.size()) < params.minValidPlanes) {
      result.iterationsUsed = iter;
      result.converged = false;
      result.fitness =
          fitnessScore(scan, mapIndex, result.transform, params.icp.fitnessMaxDistance);
      return result;
    }

    IcpIterationStats stats;
    stats.correspondences = static_cast<int>(constraints.size());

    Eigen::Matrix<double, 6, 6> hessian = Eigen::Matrix<double, 6, 6>::Zero();
    Twist rhs = Twist::Zero();
    for (const auto& c : constraints) {
      Vec3 moved = result.transform.apply(c.sourcePoint);
      double r = c.planeNormal.dot(moved - c.planeCentroid);
      Twist jac;
      jac.head<3>() = c.planeNormal;
      jac.tail<3>() = moved.cross(c.planeNormal);
      hessian += jac * jac.transpose();
      rhs += jac * r;
      stats.objectiveBefore += r * r;
    }
    // tiny Levenberg damping keeps near-singular geometry from exploding
    hessian.diagonal().array() += 1e-9 * std::max(1.0, hessian.diagonal().maxCoeff());

    Twist step = hessian.ldlt().solve(-rhs);
    if (!step.allFinite()) {
      result.iterationsUsed = iter;
      result.converged = false;
      break;
    }

    RigidTransform delta = se3Exp(step);
    result.transform = compose(delta, result.transform).orthonormalized();

    for (const auto& c : constraints) {
      double r = c.planeNormal.dot(result.transform.apply(c.sourcePoint) - c.planeCentroid);
      stats.objectiveAfter += r * r;
    }
    result.history.push_back(stats);
    result.iterationsUsed = iter + 1;

    if (step.head<3>().norm() < params.icp.translationEpsilon &&
        step.tail<3>().norm() < params.icp.rotationEpsilon) {
      result.converged = true;
      break;
    }
  }

  result.fitness = fitnessScore(scan, mapIndex, result.transform, params.icp.fitnessMaxDistance);
  return result;
}

}  // namespace scanmap
