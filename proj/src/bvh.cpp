#include "hoi/geom/bvh.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace hoi {

namespace {
constexpr int kLeafSize = 4;
}

TriBvh::TriBvh(const TriMesh& mesh) : mesh_(mesh) {
  if (mesh_.triangles.empty()) throw EmptyInput("TriBvh: mesh has no triangles");
  const int nt = mesh_.triangle_count();
  order_.resize(nt);
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centroids(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[t];
    centroids[t] = (mesh_.vertices[tri[0]] + mesh_.vertices[tri[1]] + mesh_.vertices[tri[2]]) / 3.0;
  }
  nodes_.reserve(2 * nt / kLeafSize + 4);
  build(0, nt, centroids, 0);
}

int TriBvh::build(int begin, int end, std::vector<Vec3>& centroids, int depth) {
  Node node;
  node.lo = Vec3::Constant(std::numeric_limits<double>::max());
  node.hi = Vec3::Constant(-std::numeric_limits<double>::max());
  for (int i = begin; i < end; ++i) {
    const auto& tri = mesh_.triangles[order_[i]];
    for (int k = 0; k < 3; ++k) {
      node.lo = node.lo.cwiseMin(mesh_.vertices[tri[k]]);
      node.hi = node.hi.cwiseMax(mesh_.vertices[tri[k]]);
    }
  }
  const int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(node);

  if (end - begin <= kLeafSize || depth > 48) {
    nodes_[idx].begin = begin;
    nodes_[idx].end = end;
    return idx;
  }

  int axis;
  (node.hi - node.lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });

  const int left = build(begin, mid, centroids, depth + 1);
  const int right = build(mid, end, centroids, depth + 1);
  nodes_[idx].left = left;
  nodes_[idx].right = right;
  return idx;
}

double TriBvh::box_dist2(const Node& n, const Vec3& p) const {
  const Vec3 d = (n.lo - p).cwiseMax(p - n.hi).cwiseMax(0.0);
  return d.squaredNorm();
}

TriBvh::Hit TriBvh::closest_point(const Vec3& p) const {
  Hit best;
  double best_d2 = std::numeric_limits<double>::max();

  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const int ni = stack[--top];
    const Node& n = nodes_[ni];
    if (box_dist2(n, p) >= best_d2) continue;
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int t = order_[i];
        const auto& tri = mesh_.triangles[t];
        const Vec3 c = closest_point_on_triangle(p, mesh_.vertices[tri[0]],
                                                 mesh_.vertices[tri[1]], mesh_.vertices[tri[2]]);
        const double d2 = (p - c).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best.closest = c;
          best.triangle = t;
        }
      }
    } else {
      // Visit the nearer child first.
      const double dl = box_dist2(nodes_[n.left], p);
      const double dr = box_dist2(nodes_[n.right], p);
      if (dl < dr) {
        stack[top++] = n.right;
        stack[top++] = n.left;
      } else {
        stack[top++] = n.left;
        stack[top++] = n.right;
      }
    }
  }
  best.dist = std::sqrt(best_d2);
  return best;
}

}  // namespace hoi
