#include "hoi/geom/mesh.hpp"

namespace hoi {

void TriMesh::validate() const {
  const int n = vertex_count();
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= n) throw DegenerateInput("mesh: triangle index out of range");
    }
  }
  for (int t = 0; t < triangle_count(); ++t) {
    if (triangle_area(t) <= 1e-12) throw DegenerateInput("mesh: degenerate triangle");
  }
  if (!part_labels.empty() && static_cast<int>(part_labels.size()) != n) {
    throw LengthMismatch("mesh: part label count != vertex count");
  }
}

Vec3 TriMesh::centroid() const {
  if (vertices.empty()) throw EmptyInput("mesh: centroid of empty mesh");
  Vec3 c = Vec3::Zero();
  for (const auto& v : vertices) c += v;
  return c / static_cast<double>(vertices.size());
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

TriMesh TriMesh::transformed(const Rotation& r, const Vec3& t) const {
  TriMesh out = *this;
  out.transform_in_place(r, t);
  return out;
}

void TriMesh::transform_in_place(const Rotation& r, const Vec3& t) {
  const Mat3& m = r.matrix();
  for (auto& v : vertices) v = m * v + t;
}

void TriMesh::translate_in_place(const Vec3& t) {
  for (auto& v : vertices) v += t;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;

  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return a + ab * v + ac * w;
}

}  // namespace hoi
