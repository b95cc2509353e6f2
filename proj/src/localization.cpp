#include "scanmap/localization.hpp"

#include <cmath>
#include <string>

#include "scanmap/mapcraft.hpp"

namespace scanmap {

InitializationResult initializePose(const std::vector<StampedScan>& scans,
                                    const SpatialIndex& map, const RigidTransform& initialGuess,
                                    const LocalizerConfig& config) {
  if (static_cast<int>(scans.size()) < config.initScanCount) {
    throw std::invalid_argument("initializePose: need " + std::to_string(config.initScanCount) +
                                " scans, got " + std::to_string(scans.size()));
  }

  PointCloud accumulated;
  for (int i = 0; i < config.initScanCount; ++i) {
    appendCloud(accumulated, scans[i].cloud);
  }
  PointCloud source = uniformSample(accumulated, {config.scanDownsampleVoxel});

  InitializationResult result;
  if (source.empty()) return result;

  IcpResult aligned = icp(source, map, initialGuess, config.icpParams);
  result.pose = aligned.transform;
  result.fitness = aligned.fitness;
  result.iterationsUsed = aligned.iterationsUsed;
  result.success = aligned.converged && aligned.fitness < config.initFitnessThreshold;
  return result;
}

RigidTransform predictPose(const LocalizerState& state, double timestamp) {
  if (!state.initialized) throw std::logic_error("predictPose: localizer not initialized");
  double dt = timestamp - state.lastTimestamp;
  if (dt < 0.0) {
    throw ScanOrderingError("predictPose: timestamp " + std::to_string(timestamp) +
                            " precedes " + std::to_string(state.lastTimestamp));
  }
  if (dt == 0.0) return state.pose;
  return compose(se3Exp(state.velocity * dt), state.pose).orthonormalized();
}

LocalizeScanResult localizeScan(LocalizerState& state, const StampedScan& scan,
                                const LocalizerConfig& config) {
  if (!state.initialized) throw std::logic_error("localizeScan: localizer not initialized");
  if (scan.timestamp <= state.lastTimestamp) {
    throw ScanOrderingError("localizeScan: deprecated scan at " + std::to_string(scan.timestamp) +
                            " (last " + std::to_string(state.lastTimestamp) + "), rejected");
  }
  if (scan.cloud.empty()) throw std::invalid_argument("localizeScan: empty scan");

  const double dt = scan.timestamp - state.lastTimestamp;
  const RigidTransform predicted = predictPose(state, scan.timestamp);
  PointCloud downsampled = uniformSample(scan.cloud, {config.scanDownsampleVoxel});

  IcpResult refined = pointToPlaneRefine(downsampled, state.map, predicted, config.refineParams);

  LocalizeScanResult result;
  result.fitness = refined.fitness;
  if (refined.converged) {
    result.pose = refined.transform;
    Twist measured = se3Log(compose(result.pose, invert(state.pose)));
    measured /= dt;
    state.velocity = config.velocitySmoothing * state.velocity +
                     (1.0 - config.velocitySmoothing) * measured;
  } else {
    result.pose = predicted;  // keep the motion-model pose, flag the sample
    result.degraded = true;
    state.degradedCount += 1;
  }

  state.pose = result.pose;
  state.lastTimestamp = scan.timestamp;
  state.trajectory.push_back({scan.timestamp, result.pose});
  return result;
}

int maybeExtendMap(LocalizerState& state, const StampedScan& scan,
                   const RigidTransform& registeredPose, const LocalizerConfig& config) {
  if (scan.timestamp < config.mapUpdateEnableTime) return 0;

  PointCloud downsampled = uniformSample(scan.cloud, {config.scanDownsampleVoxel});
  PointCloud world = applyTransform(downsampled, registeredPose);

  std::vector<Vec3> toInsert;
  toInsert.reserve(world.size());
  for (const Vec3& p : world.points) {
    auto nn = state.map.knn(p, 1);
    if (nn.empty() || nn[0].distance >= config.scanDownsampleVoxel) {
      toInsert.push_back(p);
    }
  }
  state.map.insert(toInsert);
  return static_cast<int>(toInsert.size());
}

SequenceRunResult runSequence(const PointCloud& mapCloud, const ScanSequence& sequence,
                              const RigidTransform& initialGuess, const LocalizerConfig& config) {
  if (sequence.scans.empty()) throw std::invalid_argument("runSequence: empty sequence");

  SequenceRunResult result;
  LocalizerState state;
  state.map = IncrementalKdTree(mapCloud.points, config.mapRebuildRatio);

  result.init = initializePose(sequence.scans, state.map, initialGuess, config);
  if (!result.init.success) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "initialization failed: fitness=%.6g threshold=%.6g",
                  result.init.fitness, config.initFitnessThreshold);
    throw std::runtime_error(buf);
  }

  state.pose = result.init.pose;
  state.initialized = true;
  state.lastTimestamp = sequence.scans[config.initScanCount - 1].timestamp;

  // the init scans were captured static: they all get the refined init pose
  for (int i = 0; i < config.initScanCount; ++i) {
    const StampedScan& scan = sequence.scans[i];
    state.trajectory.push_back({scan.timestamp, state.pose});
    PointCloud registered =
        applyTransform(uniformSample(scan.cloud, {config.scanDownsampleVoxel}), state.pose);
    appendCloud(result.registeredCloud, registered);
  }

  for (std::size_t i = config.initScanCount; i < sequence.scans.size(); ++i) {
    const StampedScan& scan = sequence.scans[i];
    LocalizeScanResult step = localizeScan(state, scan, config);
    result.insertedPoints += maybeExtendMap(state, scan, step.pose, config);
    PointCloud registered =
        applyTransform(uniformSample(scan.cloud, {config.scanDownsampleVoxel}), step.pose);
    appendCloud(result.registeredCloud, registered);
  }

  result.trajectory = state.trajectory;
  result.degradedCount = state.degradedCount;
  result.updatedMapCloud.points = state.map.points();
  return result;
}

}  // namespace scanmap
