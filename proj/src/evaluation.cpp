#include "scanmap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "scanmap/kdtree.hpp"
#include "scanmap/parallel.hpp"

namespace scanmap {

CloudDistanceReport cloudToCloud(const PointCloud& source, const PointCloud& target,
                                 double outlierThreshold) {
  if (source.empty() || target.empty()) {
    throw std::invalid_argument("cloudToCloud: clouds must be non-empty");
  }
  if (outlierThreshold <= 0.0) {
    throw std::invalid_argument("cloudToCloud: threshold must be > 0");
  }

  KdTree index(target.points);
  std::vector<double> dist(source.size(), -1.0);
  parallelFor(source.size(), [&](std::size_t i) {
    auto nn = index.knn(source.points[i], 1);
    if (!nn.empty() && nn[0].distance <= outlierThreshold) dist[i] = nn[0].distance;
  });

  CloudDistanceReport report;
  report.outlierThreshold = outlierThreshold;
  double sum = 0.0;
  for (double d : dist) {
    if (d >= 0.0) {
      sum += d;
      ++report.acceptedCount;
    } else {
      ++report.rejectedCount;
    }
  }
  if (report.acceptedCount == 0) {
    throw std::runtime_error("cloudToCloud: every correspondence exceeded the outlier threshold");
  }
  report.meanError = sum / static_cast<double>(report.acceptedCount);
  double var = 0.0;
  for (double d : dist) {
    if (d >= 0.0) var += (d - report.meanError) * (d - report.meanError);
  }
  report.stdDev = std::sqrt(var / static_cast<double>(report.acceptedCount));
  return report;
}

RunEvaluation evaluateRun(const PointCloud& priorMap, const PointCloud& registeredCloud,
                          const std::vector<TimedPose>& trajectory,
                          const std::vector<TimedPose>& groundTruth, double outlierThreshold) {
  RunEvaluation eval;
  eval.cloud = cloudToCloud(registeredCloud, priorMap, outlierThreshold);

  double sumSq = 0.0;
  for (const TimedPose& tp : trajectory) {
    // ground truth is time-sorted; binary search the nearest stamp
    auto it = std::lower_bound(groundTruth.begin(), groundTruth.end(), tp.timestamp,
                               [](const TimedPose& a, double t) { return a.timestamp < t; });
    const TimedPose* best = nullptr;
    if (it != groundTruth.end()) best = &*it;
    if (it != groundTruth.begin()) {
      const TimedPose* prev = &*(it - 1);
      if (!best || std::abs(prev->timestamp - tp.timestamp) < std::abs(best->timestamp - tp.timestamp)) {
        best = prev;
      }
    }
    if (!best || std::abs(best->timestamp - tp.timestamp) > 1e-3) continue;
    sumSq += (tp.pose.translation - best->pose.translation).squaredNorm();
    ++eval.matchedPoses;
  }
  if (eval.matchedPoses == 0) {
    throw std::runtime_error("evaluateRun: no trajectory/ground-truth timestamp matches");
  }
  eval.ate = std::sqrt(sumSq / static_cast<double>(eval.matchedPoses));
  return eval;
}

std::string formatReport(const RunEvaluation& eval) {
  std::ostringstream out;
  char buf[256];
  out << "localization run evaluation\n";
  std::snprintf(buf, sizeof(buf), "  cloud-to-cloud mean error:  %.6f m\n", eval.cloud.meanError);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  cloud-to-cloud std dev:     %.6f m\n", eval.cloud.stdDev);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  accepted / rejected:        %zu / %zu (threshold %.3f m)\n",
                eval.cloud.acceptedCount, eval.cloud.rejectedCount, eval.cloud.outlierThreshold);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  trajectory RMS error (ATE): %.6f m over %zu poses\n", eval.ate,
                eval.matchedPoses);
  out << buf;
  out << "  reference, published field results (mean/std, m): "
         "FAST-LIO-LOC 0.026/0.049, LIORF 0.050/0.069\n";
  return out.str();
}

void writeReportJson(const RunEvaluation& eval, const std::filesystem::path& path) {
  nlohmann::json j;
  j["cloud_to_cloud"] = {{"mean_error_m", eval.cloud.meanError},
                         {"std_dev_m", eval.cloud.stdDev},
                         {"accepted_count", eval.cloud.acceptedCount},
                         {"rejected_count", eval.cloud.rejectedCount},
                         {"outlier_threshold_m", eval.cloud.outlierThreshold}};
  j["trajectory"] = {{"ate_rms_m", eval.ate}, {"matched_poses", eval.matchedPoses}};
  j["reference_baselines"] = {{"FAST-LIO-LOC", {{"mean_m", 0.026}, {"std_m", 0.049}}},
                              {"LIORF", {{"mean_m", 0.050}, {"std_m", 0.069}}}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

}  // namespace scanmap
