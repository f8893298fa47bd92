#include "hoi/geom/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace hoi {

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw EmptyInput("KdTree: empty point set");
  std::vector<int> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()));
}

int KdTree::build(std::vector<int>& idx, int begin, int end) {
  if (begin >= end) return -1;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[idx[i]]);
    hi = hi.cwiseMax(points_[idx[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  Node node;
  node.axis = axis;
  node.point = idx[mid];
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(idx, begin, mid);
  const int right = build(idx, mid + 1, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

template <class Visitor>
void KdTree::search(int node, const Vec3& p, double& radius2, Visitor&& visit) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const double d2 = (points_[n.point] - p).squaredNorm();
  visit(n.point, d2, radius2);
  const double delta = p[n.axis] - points_[n.point][n.axis];
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  search(near, p, radius2, visit);
  if (delta * delta < radius2) search(far, p, radius2, visit);
}

KdTree::Hit KdTree::nearest(const Vec3& p) const {
  Hit best;
  double best_d2 = std::numeric_limits<double>::max();
  search(root_, p, best_d2, [&](int i, double d2, double& radius2) {
    if (d2 < best_d2) {
      best_d2 = d2;
      best.index = i;
      radius2 = d2;
    }
  });
  best.dist = std::sqrt(best_d2);
  return best;
}

std::vector<KdTree::Hit> KdTree::knn(const Vec3& p, int k) const {
  k = std::min<int>(k, static_cast<int>(points_.size()));
  // Small k: a sorted flat buffer beats a heap.
  std::vector<Hit> best;
  best.reserve(k + 1);
  double radius2 = std::numeric_limits<double>::max();
  search(root_, p, radius2, [&](int i, double d2, double& r2) {
    if (static_cast<int>(best.size()) < k || d2 < best.back().dist) {
      Hit h{i, d2};
      auto it = std::upper_bound(best.begin(), best.end(), h,
                                 [](const Hit& a, const Hit& b) { return a.dist < b.dist; });
      best.insert(it, h);
      if (static_cast<int>(best.size()) > k) best.pop_back();
      if (static_cast<int>(best.size()) == k) r2 = best.back().dist;
    }
  });
  for (auto& h : best) h.dist = std::sqrt(h.dist);
  return best;
}

}  // namespace hoi
