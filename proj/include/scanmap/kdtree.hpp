#pragma once

#include <cstdint>
#include <vector>

#include "scanmap/transform.hpp"

namespace scanmap {

struct Neighbor {
  int index = -1;
  double distance = 0.0;  // Euclidean, meters
};

/// Query interface shared by the static and the incremental index.
class SpatialIndex {
 public:
  virtual ~SpatialIndex() = default;
  virtual std::size_t size() const = 0;
  virtual const std::vector<Vec3>& points() const = 0;
  virtual std::vector<Neighbor> knn(const Vec3& query, int k) const = 0;
  virtual std::vector<Neighbor> radiusSearch(const Vec3& query, double radius) const = 0;
};

/// Balanced kd-tree over a snapshot of points. Immutable after build;
/// concurrent readers are safe. Distance ties are broken by lower point
/// index so query results are fully deterministic.
class KdTree : public SpatialIndex {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points, int maxPointsPerLeaf = 16);

  std::size_t size() const override { return points_.size(); }
  const std::vector<Vec3>& points() const override { return points_; }

  /// min(k, size) results, nondecreasing distance, ties by lower index.
  std::vector<Neighbor> knn(const Vec3& query, int k) const override;

  /// All points with distance <= radius, sorted the same way.
  std::vector<Neighbor> radiusSearch(const Vec3& query, double radius) const override;

  /// Comparisons spent splitting during construction (build-cost probe).
  std::uint64_t buildComparisons() const { return buildComparisons_; }

 private:
  struct Node {
    int axis = -1;           // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // index range for leaves
  };

  int buildRange(int begin, int end, int maxLeaf);
  void knnRecurse(int node, const Vec3& query, int k, std::vector<std::pair<double, int>>& heap) const;
  void radiusRecurse(int node, const Vec3& query, double r2, std::vector<Neighbor>& out) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;  // permutation of point ids, partitioned by the tree
  std::vector<Node> nodes_;
  int root_ = -1;
  std::uint64_t buildComparisons_ = 0;
};

/// Kd-tree with online insertion. New points go to a linear buffer that is
/// scanned alongside the tree; once the buffer outgrows rebuild_ratio of the
/// total, the tree is rebuilt over everything. Query results are always
/// identical to a static KdTree over the same logical point set.
///
/// Single writer: insert() must not race with queries. Readers may share the
/// index freely between insertions.
class IncrementalKdTree : public SpatialIndex {
 public:
  explicit IncrementalKdTree(std::vector<Vec3> points = {}, double rebuildRatio = 0.3,
                             int maxPointsPerLeaf = 16);

  void insert(const std::vector<Vec3>& points);

  std::size_t size() const override { return points_.size(); }
  const std::vector<Vec3>& points() const override { return points_; }
  double rebuildRatio() const { return rebuildRatio_; }
  std::size_t bufferedCount() const { return points_.size() - treeSize_; }

  std::vector<Neighbor> knn(const Vec3& query, int k) const override;
  std::vector<Neighbor> radiusSearch(const Vec3& query, double radius) const override;

 private:
  void rebuild();

  std::vector<Vec3> points_;  // ids are positions here; buffer is the tail
  std::size_t treeSize_ = 0;
  KdTree tree_;
  double rebuildRatio_;
  int maxLeaf_;
};

/// Brute-force reference used by tests and tiny inputs.
std::vector<Neighbor> bruteForceKnn(const std::vector<Vec3>& points, const Vec3& query, int k);
std::vector<Neighbor> bruteForceRadius(const std::vector<Vec3>& points, const Vec3& query, double radius);

}  // namespace scanmap
