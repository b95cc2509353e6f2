#pragma once

#include "scanmap/kdtree.hpp"
#include "scanmap/point_cloud.hpp"

namespace scanmap {

struct NormalEstimationResult {
  PointCloud cloud;
  int degenerateCount = 0;  // neighborhoods where PCA could not pick a direction
};

/// PCA normals: for each point, the unit eigenvector of the smallest
/// eigenvalue of its k-NN covariance, sign-flipped to face the viewpoint.
/// Degenerate neighborhoods (all eigenvalues equal within 1e-12) fall back
/// to +z and are counted rather than rejected.
///
/// Requires k >= 3 and cloud.size() >= k.
NormalEstimationResult estimateNormals(const PointCloud& cloud, int k,
                                       const Vec3& viewpoint = Vec3::Zero());

}  // namespace scanmap
