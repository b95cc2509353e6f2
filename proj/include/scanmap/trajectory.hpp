#pragma once

#include <filesystem>
#include <vector>

#include "scanmap/point_cloud.hpp"

namespace scanmap {

struct StampedScan {
  double timestamp = 0.0;  // seconds
  PointCloud cloud;        // sensor frame
};

struct TimedPose {
  double timestamp = 0.0;
  RigidTransform pose;
};

/// TUM trajectory format: `timestamp tx ty tz qx qy qz qw`, one pose per
/// line, quaternion normalized with qw >= 0.
void writeTrajectoryTum(const std::vector<TimedPose>& trajectory, const std::filesystem::path& path);
std::vector<TimedPose> readTrajectoryTum(const std::filesystem::path& path);

}  // namespace scanmap
