#include "hoi/geom/udf.hpp"

#include <limits>

#include "hoi/parallel.hpp"

namespace hoi {

namespace {

UdfResult make_result(const Vec3& p, const Vec3& closest) {
  UdfResult r;
  r.closest = closest;
  r.dist = (p - closest).norm();
  if (r.dist > 1e-9) {
    r.grad = (p - closest) / r.dist;
  } else {
    r.on_surface = true;
  }
  return r;
}

}  // namespace

UdfResult udf_query(const TriBvh& bvh, const Vec3& p) {
  const auto hit = bvh.closest_point(p);
  return make_result(p, hit.closest);
}

UdfResult udf_query(const TriMesh& mesh, const Vec3& p) {
  TriBvh bvh(mesh);
  return udf_query(bvh, p);
}

UdfResult udf_query_brute(const TriMesh& mesh, const Vec3& p) {
  if (mesh.triangles.empty()) throw EmptyInput("udf_query_brute: mesh has no triangles");
  double best_d2 = std::numeric_limits<double>::max();
  Vec3 best = Vec3::Zero();
  for (const auto& tri : mesh.triangles) {
    const Vec3 c = closest_point_on_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                             mesh.vertices[tri[2]]);
    const double d2 = (p - c).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return make_result(p, best);
}

std::vector<UdfResult> udf_query_batch(const TriBvh& bvh, const std::vector<Vec3>& points) {
  std::vector<UdfResult> out(points.size());
  parallel_for(static_cast<std::ptrdiff_t>(points.size()),
               [&](std::ptrdiff_t i) { out[i] = udf_query(bvh, points[i]); });
  return out;
}

}  // namespace hoi
