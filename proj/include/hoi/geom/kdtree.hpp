#pragma once

#include <vector>

#include "hoi/common.hpp"

namespace hoi {

// Exact nearest-neighbor search over a 3D point set (median-split kd-tree).
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);

  struct Hit {
    int index = -1;
    double dist = 0;
  };

  Hit nearest(const Vec3& p) const;
  // k nearest, sorted by distance.
  std::vector<Hit> knn(const Vec3& p, int k) const;
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    int axis = 0;
    int point = -1;       // index into points_
    int left = -1, right = -1;
  };
  int build(std::vector<int>& idx, int begin, int end);
  template <class Visitor>
  void search(int node, const Vec3& p, double& radius2, Visitor&& visit) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace hoi
