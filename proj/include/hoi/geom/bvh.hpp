#pragma once

#include <memory>
#include <vector>

#include "hoi/geom/mesh.hpp"

namespace hoi {

// AABB tree over mesh triangles for exact closest-point queries.
class TriBvh {
 public:
  explicit TriBvh(const TriMesh& mesh);

  struct Hit {
    double dist = 0;
    Vec3 closest = Vec3::Zero();
    int triangle = -1;
  };

  Hit closest_point(const Vec3& p) const;
  const TriMesh& mesh() const { return mesh_; }

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;  // internal when left >= 0
    int begin = 0, end = 0;     // leaf triangle range in order_
  };

  int build(int begin, int end, std::vector<Vec3>& centroids, int depth);
  double box_dist2(const Node& n, const Vec3& p) const;

  TriMesh mesh_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace hoi
