#include "scanmap/mapcraft.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>

#include "scanmap/kdtree.hpp"
#include "scanmap/parallel.hpp"

namespace scanmap {

namespace {

using VoxelKey = std::array<std::int64_t, 3>;

VoxelKey voxelOf(const Vec3& p, double voxel) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
}

Vec3 voxelCenter(const VoxelKey& k, double voxel) {
  return {(static_cast<double>(k[0]) + 0.5) * voxel, (static_cast<double>(k[1]) + 0.5) * voxel,
          (static_cast<double>(k[2]) + 0.5) * voxel};
}

}  // namespace

PointCloud uniformSample(const PointCloud& cloud, const UniformSamplingParams& params) {
  if (params.voxelSize <= 0.0) throw std::invalid_argument("uniformSample: voxelSize must be > 0");

  struct Best {
    std::size_t index;
    double dist2;
  };
  std::map<VoxelKey, Best> voxels;  // ordered key -> deterministic output order
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    VoxelKey key = voxelOf(cloud.points[i], params.voxelSize);
    double d2 = (cloud.points[i] - voxelCenter(key, params.voxelSize)).squaredNorm();
    auto [it, inserted] = voxels.try_emplace(key, Best{i, d2});
    if (!inserted && d2 < it->second.dist2) {  // strict: ties keep the earlier point
      it->second = Best{i, d2};
    }
  }

  PointCloud out;
  out.points.reserve(voxels.size());
  const bool keepNormals = cloud.hasNormals();
  if (keepNormals) out.normals.reserve(voxels.size());
  for (const auto& [key, best] : voxels) {
    out.points.push_back(cloud.points[best.index]);
    if (keepNormals) out.normals.push_back(cloud.normals[best.index]);
  }
  return out;
}

WeightedPlane fitWeightedPlane(const std::vector<Vec3>& points, const std::vector<double>& weights) {
  WeightedPlane plane;
  if (points.size() < 3 || points.size() != weights.size()) return plane;

  double wsum = 0.0;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    wsum += weights[i];
    centroid += weights[i] * points[i];
  }
  if (wsum <= 0.0) return plane;
  centroid /= wsum;

  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Vec3 d = points[i] - centroid;
    cov += weights[i] * d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3& evals = eig.eigenvalues();
  if (evals[2] <= 0.0 || evals[1] <= 1e-12 * evals[2]) return plane;  // degenerate spread

  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.offset = plane.normal.dot(centroid);
  plane.valid = true;
  return plane;
}

WeightedPlaneObjective evaluateWeightedPlaneObjective(const std::vector<Vec3>& points,
                                                      const std::vector<double>& weights,
                                                      const Vec3& normal, double offset) {
  WeightedPlaneObjective obj;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double r = normal.dot(points[i]) - offset;
    obj.value += weights[i] * r * r;
    obj.gradNormal += 2.0 * weights[i] * r * points[i];
    obj.gradOffset += -2.0 * weights[i] * r;
  }
  return obj;
}

namespace {

/// Deterministic orthonormal basis spanning the plane with the given normal.
void planeBasis(const Vec3& n, Vec3& u, Vec3& v) {
  Vec3 pick = std::abs(n.x()) < std::abs(n.z()) ? Vec3::UnitX() : Vec3::UnitZ();
  u = n.cross(pick).normalized();
  v = n.cross(u);
}

struct MlsPointOutput {
  Vec3 point;
  Vec3 normal;
  bool passedThrough = false;
};

// All fitting happens in query-centered coordinates: neighbor positions enter
// as p - q, and the output is q plus a correction. Shifting the whole cloud
// therefore shifts the result without re-rounding the fit itself.
MlsPointOutput smoothOne(const PointCloud& cloud, const KdTree& index, std::size_t i,
                         const MlsParams& params) {
  MlsPointOutput out;
  const Vec3& q = cloud.points[i];
  auto nbrs = index.radiusSearch(q, params.searchRadius);
  if (nbrs.size() < 3) {
    out.point = q;
    out.normal = cloud.hasNormals() ? cloud.normals[i] : Vec3::UnitZ();
    out.passedThrough = true;
    return out;
  }

  const double invScale2 = 1.0 / (params.gaussianScale * params.gaussianScale);
  std::vector<Vec3> pts;
  std::vector<double> w;
  pts.reserve(nbrs.size());
  w.reserve(nbrs.size());
  for (const auto& nb : nbrs) {
    pts.push_back(cloud.points[nb.index] - q);
    w.push_back(std::exp(-nb.distance * nb.distance * invScale2));
  }

  WeightedPlane plane = fitWeightedPlane(pts, w);
  if (!plane.valid) {
    out.point = q;
    out.normal = cloud.hasNormals() ? cloud.normals[i] : Vec3::UnitZ();
    out.passedThrough = true;
    return out;
  }

  Vec3 n = plane.normal;
  const Vec3 prior = cloud.hasNormals() ? cloud.normals[i] : Vec3::UnitZ();
  if (n.dot(prior) < 0.0) n = -n;
  // weighted centroid in the centered frame; the fitted plane passes through it
  double wsum = 0.0;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    wsum += w[j];
    centroid += w[j] * pts[j];
  }
  centroid /= wsum;

  if (params.polynomialOrder <= 1 || pts.size() < 6) {
    out.point = q + n * n.dot(centroid);  // project (the centered query is 0)
    out.normal = n;
    return out;
  }

  // quadratic height field h(u,v) over the plane frame, weighted fit
  Vec3 u, v;
  planeBasis(n, u, v);
  Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    Vec3 d = pts[j] - centroid;
    double pu = u.dot(d), pv = v.dot(d), ph = n.dot(d);
    Eigen::Matrix<double, 6, 1> basis;
    basis << 1.0, pu, pv, pu * pu, pu * pv, pv * pv;
    ata += w[j] * basis * basis.transpose();
    atb += w[j] * basis * ph;
  }
  Eigen::LDLT<Eigen::Matrix<double, 6, 6>> solver(ata);
  Eigen::Matrix<double, 6, 1> beta = solver.solve(atb);
  if (solver.info() != Eigen::Success || !beta.allFinite()) {
    out.point = q + n * n.dot(centroid);
    out.normal = n;
    return out;
  }

  Vec3 dq = -centroid;  // centered query relative to the expansion point
  double qu = u.dot(dq), qv = v.dot(dq);
  double h = beta[0] + beta[1] * qu + beta[2] * qv + beta[3] * qu * qu + beta[4] * qu * qv +
             beta[5] * qv * qv;
  double hu = beta[1] + 2.0 * beta[3] * qu + beta[4] * qv;
  double hv = beta[2] + beta[4] * qu + 2.0 * beta[5] * qv;

  out.point = q + (centroid + qu * u + qv * v + h * n);
  Vec3 sn = (n - hu * u - hv * v).normalized();
  if (sn.dot(prior) < 0.0) sn = -sn;
  out.normal = sn;
  return out;
}

}  // namespace

MlsResult mlsSmooth(const PointCloud& cloud, const MlsParams& params) {
  if (params.searchRadius <= 0.0 || params.gaussianScale <= 0.0) {
    throw std::invalid_argument("mlsSmooth: radius and gaussian scale must be > 0");
  }
  if (params.polynomialOrder < 1 || params.polynomialOrder > 2) {
    throw std::invalid_argument("mlsSmooth: polynomial order must be 1 or 2");
  }

  MlsResult result;
  if (cloud.size() < 3) {
    result.cloud = cloud;
    result.passThroughCount = static_cast<int>(cloud.size());
    return result;
  }

  KdTree index(cloud.points);
  result.cloud.points.resize(cloud.size());
  result.cloud.normals.resize(cloud.size());
  std::atomic<int> passThrough{0};

  parallelFor(cloud.size(), [&](std::size_t i) {
    MlsPointOutput o = smoothOne(cloud, index, i, params);
    result.cloud.points[i] = o.point;
    result.cloud.normals[i] = o.normal;
    if (o.passedThrough) passThrough.fetch_add(1);
  });

  result.passThroughCount = passThrough.load();
  return result;
}

PointCloud craftMap(const PointCloud& cloud, const UniformSamplingParams& us, const MlsParams& mls) {
  PointCloud sampled = uniformSample(cloud, us);
  if (sampled.empty()) return sampled;
  return mlsSmooth(sampled, mls).cloud;
}

}  // namespace scanmap
