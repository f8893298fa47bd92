#pragma once

#include <array>
#include <vector>

#include "hoi/common.hpp"
#include "hoi/geom/rotation.hpp"

namespace hoi {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  // Optional per-vertex part labels in {1..K}; empty when unused.
  std::vector<int> part_labels;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  // Index range + minimum triangle area (1e-12 m^2).
  void validate() const;
  Vec3 centroid() const;
  double triangle_area(int t) const;
  TriMesh transformed(const Rotation& r, const Vec3& t) const;
  void transform_in_place(const Rotation& r, const Vec3& t);
  void translate_in_place(const Vec3& t);
};

// Closest point on triangle (a, b, c) to p. Ericson's method.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace hoi
