#pragma once

#include <cstddef>
#include <vector>

#include "scanmap/transform.hpp"

namespace scanmap {

/// Ordered list of 3D points (meters) with optional per-point unit normals.
/// Normals, when present, have the same length as points.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool hasNormals() const { return !normals.empty(); }

  void reserve(std::size_t n) { points.reserve(n); }
  void add(const Vec3& p) { points.push_back(p); }
  void add(double x, double y, double z) { points.emplace_back(x, y, z); }

  /// Throws std::invalid_argument on non-finite coordinates, normal count
  /// mismatch, or non-unit normals (norm off by more than 1e-6).
  void validate() const;
};

/// Each output point is R·p + t; normals are rotated only. Input unmodified.
PointCloud applyTransform(const PointCloud& cloud, const RigidTransform& t);

/// Concatenates b onto a (points and, when both carry them, normals).
void appendCloud(PointCloud& a, const PointCloud& b);

}  // namespace scanmap
