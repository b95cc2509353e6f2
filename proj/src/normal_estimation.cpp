#include "scanmap/normal_estimation.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <stdexcept>

#include "scanmap/parallel.hpp"

namespace scanmap {

NormalEstimationResult estimateNormals(const PointCloud& cloud, int k, const Vec3& viewpoint) {
  if (k < 3) throw std::invalid_argument("estimateNormals: k must be >= 3");
  if (cloud.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("estimateNormals: cloud smaller than k");
  }

  KdTree index(cloud.points);
  NormalEstimationResult result;
  result.cloud.points = cloud.points;
  result.cloud.normals.resize(cloud.size());
  std::atomic<int> degenerate{0};

  parallelFor(cloud.size(), [&](std::size_t i) {
    auto nbrs = index.knn(cloud.points[i], k);
    Vec3 centroid = Vec3::Zero();
    for (const auto& nb : nbrs) centroid += cloud.points[nb.index];
    centroid /= static_cast<double>(nbrs.size());

    Mat3 cov = Mat3::Zero();
    for (const auto& nb : nbrs) {
      Vec3 d = cloud.points[nb.index] - centroid;
      cov += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3& evals = eig.eigenvalues();  // ascending
    Vec3 normal;
    if (evals[2] - evals[0] <= 1e-12) {
      normal = Vec3::UnitZ();
      degenerate.fetch_add(1);
    } else {
      normal = eig.eigenvectors().col(0);
    }
    if (normal.dot(viewpoint - cloud.points[i]) < 0.0) normal = -normal;
    result.cloud.normals[i] = normal.normalized();
  });

  result.degenerateCount = degenerate.load();
  return result;
}

}  // namespace scanmap
