#pragma once

#include <limits>
#include <vector>

#include "scanmap/kdtree.hpp"
#include "scanmap/point_cloud.hpp"

namespace scanmap {

struct Correspondence {
  int sourceIndex = -1;
  int targetIndex = -1;
  double distance = 0.0;  // meters, at the transform used to match
};

/// At most one pair per source point; every pair within maxDistance.
struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  double maxDistance = 0.0;
};

struct IcpParams {
  int maxIterations = 50;
  double maxCorrespondenceDistance = 1.0;  // meters
  double translationEpsilon = 1e-4;        // meters, per-iteration update
  double rotationEpsilon = 1e-4;           // radians, per-iteration update
  // Mean-squared-distance gate used by pose initialization. Infinite
  // fitnessMaxDistance counts every source point, matching the usual
  // fitness-score convention; mismatched geometry then shows up in the score
  // instead of being dropped as outliers.
  double fitnessThreshold = 0.01;  // m^2
  double fitnessMaxDistance = std::numeric_limits<double>::infinity();
};

struct IcpIterationStats {
  int correspondences = 0;
  double objectiveBefore = 0.0;  // sum of squared pair distances at iteration start
  double objectiveAfter = 0.0;   // same pairs, after the transform update
};

struct IcpResult {
  RigidTransform transform;
  double fitness = std::numeric_limits<double>::infinity();  // mean squared distance, m^2
  int iterationsUsed = 0;
  bool converged = false;
  std::vector<IcpIterationStats> history;
};

/// Local plane fit from a point's nearest map neighbors: centroid plus unit
/// normal. valid=false when the neighborhood is degenerate or any neighbor
/// sits farther than the planarity gate from the fitted plane.
struct LocalPlane {
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  bool valid = false;

  double signedDistance(const Vec3& p) const { return normal.dot(p - centroid); }
};

/// Closed-form SE(3) fit minimizing sum ||R*p_i + t - q_i||^2 via SVD of the
/// cross-covariance. Reflections are rejected by flipping the last singular
/// direction, so the result is always a proper rotation.
/// Throws std::invalid_argument for fewer than 3 pairs, mismatched lengths,
/// or a rank-deficient (collinear) configuration.
RigidTransform bestRigidTransform(const std::vector<Vec3>& sourcePts,
                                  const std::vector<Vec3>& targetPts);

/// Nearest target point for each transformed source point, kept when within
/// maxDistance.
CorrespondenceSet findCorrespondences(const PointCloud& source, const SpatialIndex& targetIndex,
                                      const RigidTransform& transform, double maxDistance);

/// Point-to-point ICP: alternates findCorrespondences and bestRigidTransform
/// from initialGuess. Stops at maxIterations or when the incremental update
/// falls below both epsilons (converged = stopped by epsilon). Zero
/// correspondences yield a non-converged result with infinite fitness.
IcpResult icp(const PointCloud& source, const SpatialIndex& targetIndex,
              const RigidTransform& initialGuess, const IcpParams& params);

/// Mean of squared source-to-nearest-target distances over correspondences
/// within maxDistance; +inf when none qualify.
double fitnessScore(const PointCloud& source, const SpatialIndex& targetIndex,
                    const RigidTransform& transform, double maxDistance);

/// Least-squares plane through the k nearest neighbors of query.
LocalPlane fitLocalPlane(const SpatialIndex& index, const Vec3& query, int k = 5,
                         double maxPlaneDistance = 0.1);

/// One scan point tied to its map plane; the unit of the point-to-plane
/// objective sum_i (n_i . (R p_i + t - c_i))^2.
struct PlaneConstraint {
  Vec3 sourcePoint = Vec3::Zero();  // sensor frame
  Vec3 planeCentroid = Vec3::Zero();
  Vec3 planeNormal = Vec3::UnitZ();
};

/// Builds constraints by looking up each transformed scan point's k-NN plane
/// in the map. Points farther than maxCorrespondenceDistance from the map,
/// and points whose neighborhood fails the planarity gate, are skipped.
std::vector<PlaneConstraint> buildPlaneConstraints(
    const PointCloud& scan, const SpatialIndex& mapIndex, const RigidTransform& transform, int k = 5,
    double maxPlaneDistance = 0.1,
    double maxCorrespondenceDistance = std::numeric_limits<double>::infinity());

/// Objective value and its gradient with respect to a left-multiplied
/// perturbation exp([v; w]) of the pose. Exposed for derivative checks.
struct PlaneObjective {
  double value = 0.0;
  Twist gradient = Twist::Zero();
};
PlaneObjective evaluatePlaneObjective(const std::vector<PlaneConstraint>& constraints,
                                      const RigidTransform& transform);

struct PointToPlaneParams {
  IcpParams icp;
  int planeNeighbors = 5;
  double maxPlaneDistance = 0.1;  // meters, planarity gate
  int minValidPlanes = 10;
};

/// Gauss-Newton over point-to-plane residuals; the update twist is applied
/// multiplicatively on the left. Fewer than minValidPlanes constraints at any
/// iteration aborts with converged=false.
IcpResult pointToPlaneRefine(const PointCloud& scan, const SpatialIndex& mapIndex,
                             const RigidTransform& initial, const PointToPlaneParams& params);

}  // namespace scanmap
