#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace trajex {

/// Squared distance and point index.
struct Neighbor {
  double dist2;
  int index;

  bool operator<(const Neighbor &o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
  }
};

/// Static k-d tree over Dim-dimensional points stored contiguously as
/// `Scalar`. Results are sorted by (distance, index), so queries are
/// deterministic.
template <int Dim, typename Scalar = double>
class KdTree {
 public:
  KdTree() = default;

  /// `data` holds n * Dim values, point i at [i*Dim, (i+1)*Dim).
  explicit KdTree(std::vector<Scalar> data) : data_(std::move(data)) {
    const int n = static_cast<int>(data_.size() / Dim);
    perm_.resize(n);
    for (int i = 0; i < n; ++i) perm_[i] = i;
    if (n > 0) {
      nodes_.reserve(2 * n / kLeafSize + 2);
      build(0, n);
    }
  }

  template <typename PointRange, typename Getter>
  static KdTree from(const PointRange &points, Getter get) {
    std::vector<Scalar> flat;
    flat.reserve(points.size() * Dim);
    for (const auto &p : points) {
      const auto &c = get(p);
      for (int d = 0; d < Dim; ++d) flat.push_back(static_cast<Scalar>(c[d]));
    }
    return KdTree(std::move(flat));
  }

  int size() const { return static_cast<int>(perm_.size()); }

  const Scalar *point(int i) const { return data_.data() + std::size_t(i) * Dim; }

  /// The k nearest points, nearest first.
  std::vector<Neighbor> knn(const Scalar *query, int k) const {
    std::vector<Neighbor> heap;
    if (k <= 0 || nodes_.empty()) return heap;
    heap.reserve(k + 1);
    std::array<double, Dim> offsets{};
    Search s{query, &heap, k, std::numeric_limits<double>::infinity(), true};
    search(0, s, 0.0, offsets);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  /// Points within radius, nearest first, truncated to the nearest max_nn
  /// when max_nn > 0.
  std::vector<Neighbor> radius(const Scalar *query, double r, int max_nn = 0) const {
    std::vector<Neighbor> out;
    if (nodes_.empty()) return out;
    std::array<double, Dim> offsets{};
    if (max_nn > 0) {
      out.reserve(max_nn + 1);
      Search s{query, &out, max_nn, r * r, true};
      search(0, s, 0.0, offsets);
      std::sort_heap(out.begin(), out.end());
    } else {
      Search s{query, &out, 0, r * r, false};
      search(0, s, 0.0, offsets);
      std::sort(out.begin(), out.end());
    }
    return out;
  }

  Neighbor nearest(const Scalar *query) const {
    auto r = knn(query, 1);
    return r.empty() ? Neighbor{std::numeric_limits<double>::infinity(), -1} : r[0];
  }

 private:
  static constexpr int kLeafSize = 12;

  struct Node {
    int begin = 0, end = 0;  // leaf range into perm_
    int split_dim = -1;      // -1 for leaves
    Scalar split = 0;
    int left = -1, right = -1;
  };

  struct Search {
    const Scalar *query;
    std::vector<Neighbor> *result;
    int k;  // 0: unbounded radius search
    double bound2;
    bool bounded_count;

    double worst() const {
      if (bounded_count && static_cast<int>(result->size()) == k)
        return std::min(bound2, result->front().dist2);
      return bound2;
    }
    void offer(double d2, int idx) {
      if (d2 > bound2) return;
      if (!bounded_count) {
        result->push_back({d2, idx});
        return;
      }
      Neighbor nb{d2, idx};
      if (static_cast<int>(result->size()) < k) {
        result->push_back(nb);
        std::push_heap(result->begin(), result->end());
      } else if (nb < result->front()) {
        std::pop_heap(result->begin(), result->end());
        result->back() = nb;
        std::push_heap(result->begin(), result->end());
      }
    }
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    std::array<Scalar, Dim> lo, hi;
    lo.fill(std::numeric_limits<Scalar>::infinity());
    hi.fill(-std::numeric_limits<Scalar>::infinity());
    for (int i = begin; i < end; ++i) {
      const Scalar *p = point(perm_[i]);
      for (int d = 0; d < Dim; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    }
    int dim = 0;
    for (int d = 1; d < Dim; ++d)
      if (hi[d] - lo[d] > hi[dim] - lo[dim]) dim = d;
    if (!(hi[dim] > lo[dim])) {  // all coincident
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    const int mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                     [&](int a, int b) {
                       const Scalar pa = point(a)[dim], pb = point(b)[dim];
                       return pa < pb || (pa == pb && a < b);
                     });
    const double split = point(perm_[mid])[dim];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    Node &node = nodes_[id];
    node.split_dim = dim;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  // Bound uses accumulated per-dimension offsets to the query's cell.
  void search(int id, Search &s, double min_dist2, std::array<double, Dim> &offsets) const {
    const Node &node = nodes_[id];
    if (node.split_dim < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = perm_[i];
        const Scalar *p = point(idx);
        Scalar d2 = 0;
        for (int d = 0; d < Dim; ++d) {
          const Scalar diff = p[d] - s.query[d];
          d2 += diff * diff;
        }
        s.offer(double(d2), idx);
      }
      return;
    }
    const int dim = node.split_dim;
    const double diff = double(s.query[dim]) - double(node.split);
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, s, min_dist2, offsets);
    const double old = offsets[dim];
    const double far_dist2 = min_dist2 - old * old + diff * diff;
    if (far_dist2 <= s.worst()) {
      offsets[dim] = diff;
      search(far, s, far_dist2, offsets);
      offsets[dim] = old;
    }
  }

  std::vector<Scalar> data_;
  std::vector<int> perm_;
  std::vector<Node> nodes_;
};

using KdTree3 = KdTree<3>;

inline KdTree3 make_kdtree(std::span<const Eigen::Vector3d> points) {
  return KdTree3::from(points, [](const Eigen::Vector3d &p) -> const Eigen::Vector3d & { return p; });
}

}  // namespace trajex
