#include "scanmap/point_cloud.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scanmap {

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw std::invalid_argument("point " + std::to_string(i) + " has non-finite coordinates");
    }
  }
  if (!normals.empty()) {
    if (normals.size() != points.size()) {
      throw std::invalid_argument("normal count " + std::to_string(normals.size()) +
                                  " does not match point count " + std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
      if (!normals[i].allFinite() || std::abs(normals[i].norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("normal " + std::to_string(i) + " is not unit length");
      }
    }
  }
}

PointCloud applyTransform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) {
    out.points.push_back(t.rotation * p + t.translation);
  }
  out.normals.reserve(cloud.normals.size());
  for (const Vec3& n : cloud.normals) {
    out.normals.push_back(t.rotation * n);
  }
  return out;
}

void appendCloud(PointCloud& a, const PointCloud& b) {
  a.points.insert(a.points.end(), b.points.begin(), b.points.end());
  if (a.hasNormals() && b.hasNormals()) {
    a.normals.insert(a.normals.end(), b.normals.begin(), b.normals.end());
  } else {
    a.normals.clear();
  }
}

}  // namespace scanmap
