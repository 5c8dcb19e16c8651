#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "common/geometry.hpp"

namespace gm::laplace {

/// Static 2-d tree over a point set. Neighbor queries order candidates by
/// (squared distance, index) and match an exhaustive scan exactly, ties included.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec2>& points) : points_(points), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(points.size());
    root_ = build(0, order_.size(), 0);
  }

  /// The k nearest points to `query`, skipping index `exclude` (pass
  /// points.size() to skip nothing). Sorted nearest first.
  std::vector<std::size_t> nearest(Vec2 query, std::size_t k, std::size_t exclude) const {
    Heap heap;
    heap.k = k;
    if (k > 0) search(root_, query, exclude, heap);
    std::sort(heap.items.begin(), heap.items.end());
    std::vector<std::size_t> out;
    out.reserve(heap.items.size());
    for (const auto& c : heap.items) out.push_back(c.index);
    return out;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Node {
    std::size_t point;
    int axis;
    std::size_t left = kNone, right = kNone;
  };

  struct Candidate {
    double d2;
    std::size_t index;
    friend bool operator<(const Candidate& a, const Candidate& b) {
      return a.d2 != b.d2 ? a.d2 < b.d2 : a.index < b.index;
    }
  };

  // Max-heap on (d2, index) of the best k seen so far.
  struct Heap {
    std::size_t k = 0;
    std::vector<Candidate> items;
    bool full() const { return items.size() >= k; }
    const Candidate& worst() const { return items.front(); }
    void offer(Candidate c) {
      if (!full()) {
        items.push_back(c);
        std::push_heap(items.begin(), items.end());
      } else if (c < worst()) {
        std::pop_heap(items.begin(), items.end());
        items.back() = c;
        std::push_heap(items.begin(), items.end());
      }
    }
  };

  static double coord(Vec2 p, int axis) { return axis == 0 ? p.x : p.y; }

  std::size_t build(std::size_t begin, std::size_t end, int depth) {
    if (begin >= end) return kNone;
    const int axis = depth % 2;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + std::ptrdiff_t(begin), order_.begin() + std::ptrdiff_t(mid),
                     order_.begin() + std::ptrdiff_t(end), [&](std::size_t a, std::size_t b) {
                       double ca = coord(points_[a], axis), cb = coord(points_[b], axis);
                       return ca != cb ? ca < cb : a < b;
                     });
    const std::size_t id = nodes_.size();
    nodes_.push_back({order_[mid], axis});
    const std::size_t left = build(begin, mid, depth + 1);
    const std::size_t right = build(mid + 1, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::size_t node_id, Vec2 q, std::size_t exclude, Heap& heap) const {
    if (node_id == kNone) return;
    const Node& node = nodes_[node_id];
    const Vec2 p = points_[node.point];
    if (node.point != exclude) {
      const double dx = q.x - p.x, dy = q.y - p.y;
      heap.offer({dx * dx + dy * dy, node.point});
    }
    const double diff = coord(q, node.axis) - coord(p, node.axis);
    const std::size_t near_side = diff < 0 ? node.left : node.right;
    const std::size_t far_side = diff < 0 ? node.right : node.left;
    search(near_side, q, exclude, heap);
    // Prune only when the splitting plane is strictly farther than the worst candidate.
    if (!heap.full() || diff * diff <= heap.worst().d2) search(far_side, q, exclude, heap);
  }

  const std::vector<Vec2>& points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t root_ = kNone;
};

}  // namespace gm::laplace
