#include "scanmap/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scanmap {

namespace {

void sortNeighbors(std::vector<Neighbor>& v) {
  std::sort(v.begin(), v.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.index < b.index;
  });
}

}  // namespace

KdTree::KdTree(std::vector<Vec3> points, int maxPointsPerLeaf) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / std::max(1, maxPointsPerLeaf) + 4);
    root_ = buildRange(0, static_cast<int>(points_.size()), std::max(1, maxPointsPerLeaf));
  }
}

int KdTree::buildRange(int begin, int end, int maxLeaf) {
  Node node;
  if (end - begin <= maxLeaf) {
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Vec3 extent = hi - lo;
  int axis = 0;
  extent.maxCoeff(&axis);
  if (extent[axis] <= 0.0) {  // all points coincide: nothing to split
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [this, axis](int a, int b) {
                     ++buildComparisons_;
                     return points_[a][axis] < points_[b][axis];
                   });

  node.axis = axis;
  node.split = points_[order_[mid]][axis];
  int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  int left = buildRange(begin, mid, maxLeaf);
  int right = buildRange(mid, end, maxLeaf);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void KdTree::knnRecurse(int nodeIdx, const Vec3& query, int k,
                        std::vector<std::pair<double, int>>& heap) const {
  const Node& node = nodes_[nodeIdx];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int id = order_[i];
      double d2 = (points_[id] - query).squaredNorm();
      std::pair<double, int> cand(d2, id);
      if (static_cast<int>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }

  double delta = query[node.axis] - node.split;
  int near = delta < 0 ? node.left : node.right;
  int far = delta < 0 ? node.right : node.left;
  knnRecurse(near, query, k, heap);
  // <= keeps equal-distance points on the far side reachable for tie-breaking
  if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().first) {
    knnRecurse(far, query, k, heap);
  }
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, int k) const {
  std::vector<Neighbor> out;
  if (root_ < 0 || k < 1) return out;
  std::vector<std::pair<double, int>> heap;
  heap.reserve(static_cast<std::size_t>(k));
  knnRecurse(root_, query, k, heap);
  std::sort(heap.begin(), heap.end());
  out.reserve(heap.size());
  for (const auto& [d2, id] : heap) {
    out.push_back({id, std::sqrt(d2)});
  }
  return out;
}

void KdTree::radiusRecurse(int nodeIdx, const Vec3& query, double r2,
                           std::vector<Neighbor>& out) const {
  const Node& node = nodes_[nodeIdx];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int id = order_[i];
      double d2 = (points_[id] - query).squaredNorm();
      if (d2 <= r2) out.push_back({id, std::sqrt(d2)});
    }
    return;
  }
  double delta = query[node.axis] - node.split;
  int near = delta < 0 ? node.left : node.right;
  int far = delta < 0 ? node.right : node.left;
  radiusRecurse(near, query, r2, out);
  if (delta * delta <= r2) radiusRecurse(far, query, r2, out);
}

std::vector<Neighbor> KdTree::radiusSearch(const Vec3& query, double radius) const {
  std::vector<Neighbor> out;
  if (root_ < 0 || radius <= 0.0) return out;
  radiusRecurse(root_, query, radius * radius, out);
  sortNeighbors(out);
  return out;
}

IncrementalKdTree::IncrementalKdTree(std::vector<Vec3> points, double rebuildRatio,
                                     int maxPointsPerLeaf)
    : points_(std::move(points)), rebuildRatio_(rebuildRatio), maxLeaf_(maxPointsPerLeaf) {
  treeSize_ = points_.size();
  tree_ = KdTree(points_, maxLeaf_);
}

void IncrementalKdTree::insert(const std::vector<Vec3>& points) {
  points_.insert(points_.end(), points.begin(), points.end());
  if (!points_.empty() &&
      static_cast<double>(bufferedCount()) > rebuildRatio_ * static_cast<double>(points_.size())) {
    rebuild();
  }
}

void IncrementalKdTree::rebuild() {
  tree_ = KdTree(points_, maxLeaf_);
  treeSize_ = points_.size();
}

std::vector<Neighbor> IncrementalKdTree::knn(const Vec3& query, int k) const {
  std::vector<Neighbor> out = tree_.knn(query, k);
  for (std::size_t j = treeSize_; j < points_.size(); ++j) {
    out.push_back({static_cast<int>(j), std::sqrt((points_[j] - query).squaredNorm())});
  }
  sortNeighbors(out);
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<std::size_t>(k));
  return out;
}

std::vector<Neighbor> IncrementalKdTree::radiusSearch(const Vec3& query, double radius) const {
  std::vector<Neighbor> out = tree_.radiusSearch(query, radius);
  double r2 = radius * radius;
  for (std::size_t j = treeSize_; j < points_.size(); ++j) {
    double d2 = (points_[j] - query).squaredNorm();
    if (radius > 0.0 && d2 <= r2) out.push_back({static_cast<int>(j), std::sqrt(d2)});
  }
  sortNeighbors(out);
  return out;
}

std::vector<Neighbor> bruteForceKnn(const std::vector<Vec3>& points, const Vec3& query, int k) {
  std::vector<Neighbor> all;
  all.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all.push_back({static_cast<int>(i), std::sqrt((points[i] - query).squaredNorm())});
  }
  sortNeighbors(all);
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<std::size_t>(std::max(0, k)));
  return all;
}

std::vector<Neighbor> bruteForceRadius(const std::vector<Vec3>& points, const Vec3& query,
                                       double radius) {
  std::vector<Neighbor> out;
  double r2 = radius * radius;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double d2 = (points[i] - query).squaredNorm();
    if (d2 <= r2) out.push_back({static_cast<int>(i), std::sqrt(d2)});
  }
  sortNeighbors(out);
  return out;
}

}  // namespace scanmap
