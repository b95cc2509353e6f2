#pragma once

#include <vector>

#include "scanmap/point_cloud.hpp"

namespace scanmap {

struct UniformSamplingParams {
  double voxelSize = 0.05;  // meters
};

struct MlsParams {
  double searchRadius = 0.3;   // meters
  int polynomialOrder = 2;     // 1 = plane projection, 2 = bivariate quadratic
  double gaussianScale = 0.3;  // width of the distance weight theta (default: the search radius)
};

/// Voxel filter with the grid anchored at the world origin: each occupied
/// voxel keeps the single input point nearest its center (ties by lowest
/// input index). Output is ordered by ascending voxel key, so results are
/// reproducible across runs and translations by whole voxels.
PointCloud uniformSample(const PointCloud& cloud, const UniformSamplingParams& params);

struct MlsResult {
  PointCloud cloud;
  int passThroughCount = 0;  // points with fewer than 3 radius neighbors
};

/// Moving-least-squares smoothing: per point, a distance-weighted plane fit
/// over the radius neighborhood, then projection onto the plane (order 1) or
/// onto a weighted bivariate polynomial fit in the plane frame (order 2).
/// Output normals are the fitted surface normals, oriented to agree with the
/// input normals when present, else toward +z.
MlsResult mlsSmooth(const PointCloud& cloud, const MlsParams& params);

/// Two-step map de-noising: uniformSample then mlsSmooth.
PointCloud craftMap(const PointCloud& cloud, const UniformSamplingParams& us, const MlsParams& mls);

/// Weighted plane-fit primitive behind mlsSmooth, exposed for derivative
/// checks: minimizes sum_i w_i (n . p_i - offset)^2 subject to |n| = 1.
struct WeightedPlane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;  // n . x = offset on the plane
  bool valid = false;
};
WeightedPlane fitWeightedPlane(const std::vector<Vec3>& points, const std::vector<double>& weights);

/// Objective value and gradient (d/dn, d/dOffset) of the weighted plane
/// objective at an arbitrary, not necessarily optimal, (n, offset).
struct WeightedPlaneObjective {
  double value = 0.0;
  Vec3 gradNormal = Vec3::Zero();
  double gradOffset = 0.0;
};
WeightedPlaneObjective evaluateWeightedPlaneObjective(const std::vector<Vec3>& points,
                                                      const std::vector<double>& weights,
                                                      const Vec3& normal, double offset);

}  // namespace scanmap
