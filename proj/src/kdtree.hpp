#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "bpa/quat.hpp"

namespace bpa::detail {

/// Exact nearest-neighbor index over a fixed set of 3-D points.
/// Equal-distance ties resolve to the lowest point index.
class KdTree3 {
public:
  explicit KdTree3(std::vector<Vec3> pts) : pts_(std::move(pts)) {
    idx_.resize(pts_.size());
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    nodes_.reserve(pts_.size());
    if (!pts_.empty()) root_ = build(0, pts_.size());
  }

  bool empty() const { return pts_.empty(); }

  /// Index of the nearest point to `query` (lowest index among exact ties).
  std::size_t nearest(const Vec3& query) const {
    Best best;
    search(root_, query, best);
    return best.index;
  }

private:
  struct Node {
    Vec3 point;
    std::size_t index = 0;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  struct Best {
    double dist2 = std::numeric_limits<double>::infinity();
    std::size_t index = static_cast<std::size_t>(-1);
  };

  int build(std::size_t lo, std::size_t hi) {
    // Split on the widest axis at the median; (value, index) comparator
    // keeps the layout deterministic under duplicate coordinates.
    Vec3 mn = pts_[idx_[lo]], mx = pts_[idx_[lo]];
    for (std::size_t i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(pts_[idx_[i]]);
      mx = mx.cwiseMax(pts_[idx_[i]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);

    const std::size_t mid = (lo + hi) / 2;
    std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                       const double va = pts_[a](axis), vb = pts_[b](axis);
                       return va < vb || (va == vb && a < b);
                     });

    Node n;
    n.point = pts_[idx_[mid]];
    n.index = idx_[mid];
    n.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (mid > lo) nodes_[self].left = build(lo, mid);
    if (mid + 1 < hi) nodes_[self].right = build(mid + 1, hi);
    return self;
  }

  void search(int ni, const Vec3& q, Best& best) const {
    if (ni < 0) return;
    const Node& n = nodes_[ni];
    const double d2 = (n.point - q).squaredNorm();
    if (d2 < best.dist2 || (d2 == best.dist2 && n.index < best.index)) {
      best.dist2 = d2;
      best.index = n.index;
    }
    const double delta = q(n.axis) - n.point(n.axis);
    const int near = delta < 0.0 ? n.left : n.right;
    const int far = delta < 0.0 ? n.right : n.left;
    search(near, q, best);
    // <= so equal-distance candidates across the plane stay reachable.
    if (delta * delta <= best.dist2) search(far, q, best);
  }

  std::vector<Vec3> pts_;
  std::vector<std::size_t> idx_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace bpa::detail
