#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "scanmap/kdtree.hpp"
#include "scanmap/registration.hpp"
#include "scanmap/simulation.hpp"
#include "scanmap/trajectory.hpp"

namespace scanmap {

struct ScanOrderingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LocalizerConfig {
  int initScanCount = 10;              // scans accumulated while static
  double initFitnessThreshold = 0.01;  // m^2; initialization succeeds below this
  // Scans at or after this time may extend the map; +inf = pure localization.
  double mapUpdateEnableTime = std::numeric_limits<double>::infinity();
  double scanDownsampleVoxel = 0.1;    // meters; also the map insertion voxel
  double velocitySmoothing = 0.5;      // blend kept from the previous velocity
  double mapRebuildRatio = 0.3;        // incremental index rebuild trigger
  IcpParams icpParams;                 // initialization ICP
  PointToPlaneParams refineParams;     // per-scan refinement
};

/// Map, pose and velocity of the running localizer. Single writer: feed
/// scans sequentially; hand off between threads only at scan boundaries.
struct LocalizerState {
  IncrementalKdTree map;
  RigidTransform pose;
  Twist velocity = Twist::Zero();
  bool initialized = false;
  double lastTimestamp = 0.0;
  std::vector<TimedPose> trajectory;
  int degradedCount = 0;
};

struct InitializationResult {
  bool success = false;
  RigidTransform pose;
  double fitness = std::numeric_limits<double>::infinity();
  int iterationsUsed = 0;
};

/// Concatenates the first initScanCount scans (captured static), voxel
/// downsamples, and runs ICP against the map from the guess. Succeeds only
/// if ICP converged and the fitness score clears the threshold; on failure
/// the caller may retry with a new guess.
/// Throws std::invalid_argument when fewer scans are supplied than required.
InitializationResult initializePose(const std::vector<StampedScan>& scans,
                                    const SpatialIndex& map, const RigidTransform& initialGuess,
                                    const LocalizerConfig& config);

/// Constant-velocity prediction: pose advanced by exp(velocity * dt).
/// Throws ScanOrderingError for timestamps before the last processed scan.
RigidTransform predictPose(const LocalizerState& state, double timestamp);

struct LocalizeScanResult {
  RigidTransform pose;
  bool degraded = false;  // refinement did not converge; prediction kept
  double fitness = std::numeric_limits<double>::infinity();
};

/// One step of the scan-to-map loop: downsample, refine point-to-plane from
/// the predicted pose, update velocity by pose differencing, append to the
/// trajectory. Out-of-order scans are rejected with the state unchanged.
LocalizeScanResult localizeScan(LocalizerState& state, const StampedScan& scan,
                                const LocalizerConfig& config);

/// Inserts the registered scan into the map once the enable time is reached,
/// skipping points whose nearest map neighbor is closer than the insertion
/// voxel. Returns the number of points inserted.
int maybeExtendMap(LocalizerState& state, const StampedScan& scan,
                   const RigidTransform& registeredPose, const LocalizerConfig& config);

struct SequenceRunResult {
  InitializationResult init;
  std::vector<TimedPose> trajectory;
  PointCloud registeredCloud;  // union of registered (downsampled) scans
  PointCloud updatedMapCloud;  // prior map plus any extension
  int degradedCount = 0;
  int insertedPoints = 0;
};

/// Full pipeline over a sequence: initialize on the first initScanCount
/// scans, then localizeScan + maybeExtendMap per remaining scan.
/// Throws std::runtime_error (with the final fitness) when initialization
/// fails.
SequenceRunResult runSequence(const PointCloud& mapCloud, const ScanSequence& sequence,
                              const RigidTransform& initialGuess, const LocalizerConfig& config);

}  // namespace scanmap
