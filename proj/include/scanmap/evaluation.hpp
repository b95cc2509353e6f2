#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scanmap/point_cloud.hpp"
#include "scanmap/trajectory.hpp"

namespace scanmap {

/// Source-to-target nearest-neighbor distance statistics with outlier
/// rejection. Deliberately asymmetric: swap the arguments for the other
/// direction.
struct CloudDistanceReport {
  double meanError = 0.0;  // meters (Euclidean, not squared)
  double stdDev = 0.0;     // population standard deviation over accepted points
  std::size_t acceptedCount = 0;
  std::size_t rejectedCount = 0;
  double outlierThreshold = 0.0;
};

/// Per source point, the distance to the nearest target point; distances
/// above the threshold are rejected (newly mapped geometry would otherwise
/// skew the statistics). Throws std::runtime_error when nothing survives.
CloudDistanceReport cloudToCloud(const PointCloud& source, const PointCloud& target,
                                 double outlierThreshold);

struct RunEvaluation {
  CloudDistanceReport cloud;
  double ate = 0.0;  // RMS translational error, meters; frames already shared
  std::size_t matchedPoses = 0;
};

/// Cloud-to-cloud of the registered cloud against the prior map plus the
/// absolute trajectory error after nearest-timestamp association (within
/// 1e-3 s). No alignment step: both trajectories live in the map frame.
RunEvaluation evaluateRun(const PointCloud& priorMap, const PointCloud& registeredCloud,
                          const std::vector<TimedPose>& trajectory,
                          const std::vector<TimedPose>& groundTruth, double outlierThreshold);

/// Human-readable report; the footer cites published field results for scale.
std::string formatReport(const RunEvaluation& eval);

/// Machine-readable JSON mirror of the report.
void writeReportJson(const RunEvaluation& eval, const std::filesystem::path& path);

}  // namespace scanmap
