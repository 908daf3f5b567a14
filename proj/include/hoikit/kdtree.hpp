#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "hoikit/types.hpp"

namespace hoikit {

inline double squared_distance(const double* a, const double* b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

/// Exact nearest-vertex queries over a fixed 3D point set. Built per call
/// site and immutable afterwards, so concurrent queries are safe. Points are
/// repacked in leaf order during construction so leaf scans run over
/// contiguous memory.
class PointKdTree {
 public:
  explicit PointKdTree(const Points& points) {
    const int n = static_cast<int>(points.rows());
    if (n < 1) throw ParameterError("kd-tree needs at least one point");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    nodes_.reserve(2 * n / kLeafSize + 2);
    root_ = build(points, order, 0, n);
    packed_.resize(3 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c)
        packed_[3 * static_cast<std::size_t>(i) + c] = points(order[i], c);
  }

  /// Squared distance to the nearest point, never exceeding bound_sq.
  /// Exact whenever the true nearest squared distance is below the bound.
  double nearest_squared(const double* q, double bound_sq) const {
    double best = bound_sq;
    search(root_, q, best);
    return best;
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    double split = 0.0;
    int axis = -1;           // -1 marks a leaf
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into the packed buffer
  };

  int build(const Points& points, std::vector<int>& order, int begin,
            int end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = begin; i < end; ++i) {
      const auto row = points.row(order[i]);
      for (int c = 0; c < 3; ++c) {
        lo(c) = std::min(lo(c), row(c));
        hi(c) = std::max(hi(c), row(c));
      }
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid,
                     order.begin() + end, [&](int a, int b) {
                       return points(a, axis) < points(b, axis);
                     });
    node.axis = axis;
    node.split = points(order[mid], axis);
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(points, order, begin, mid);
    const int right = build(points, order, mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int idx, const double* q, double& best_sq) const {
    const Node& node = nodes_[idx];
    if (node.axis < 0) {
      const double* p = packed_.data() + 3 * node.begin;
      double best = best_sq;
      for (int i = node.begin; i < node.end; ++i, p += 3) {
        const double dx = p[0] - q[0];
        const double dy = p[1] - q[1];
        const double dz = p[2] - q[2];
        const double d = dx * dx + dy * dy + dz * dz;
        if (d < best) best = d;
      }
      best_sq = best;
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, best_sq);
    if (delta * delta < best_sq) search(far, q, best_sq);
  }

  std::vector<double> packed_;
  std::vector<Node> nodes_;
  int root_ = 0;
};

}  // namespace hoikit
