#include "scanmap/trajectory.hpp"

#include <Eigen/Geometry>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scanmap {

void writeTrajectoryTum(const std::vector<TimedPose>& trajectory, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  for (const TimedPose& tp : trajectory) {
    Eigen::Quaterniond q(tp.pose.rotation);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // canonical sign for reproducible files
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", tp.timestamp,
                  tp.pose.translation.x(), tp.pose.translation.y(), tp.pose.translation.z(), q.x(),
                  q.y(), q.z(), q.w());
    out << buf;
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<TimedPose> readTrajectoryTum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::vector<TimedPose> trajectory;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    TimedPose tp;
    double qx, qy, qz, qw;
    if (!(ss >> tp.timestamp >> tp.pose.translation.x() >> tp.pose.translation.y() >>
          tp.pose.translation.z() >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineNo) +
                               ": malformed trajectory line");
    }
    Eigen::Quaterniond q(qw, qx, qy, qz);
    q.normalize();
    tp.pose.rotation = q.toRotationMatrix();
    trajectory.push_back(tp);
  }
  return trajectory;
}

}  // namespace scanmap
