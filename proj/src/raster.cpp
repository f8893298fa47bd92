#include "hoi/sim/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoi {

namespace {

constexpr double kNear = 0.05;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScreenVert {
  Vec2 px;
  double inv_z;  // interpolated linearly in screen space
};

template <class Shade>
void raster_triangle(const ScreenVert& a, const ScreenVert& b, const ScreenVert& c, int width,
                     int height, Shade&& shade) {
  const double area = (b.px.x() - a.px.x()) * (c.px.y() - a.px.y()) -
                      (b.px.y() - a.px.y()) * (c.px.x() - a.px.x());
  if (std::abs(area) < 1e-12) return;
  const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.px.x(), b.px.x(), c.px.x()}))));
  const int x1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.px.x(), b.px.x(), c.px.x()}))));
  const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.px.y(), b.px.y(), c.px.y()}))));
  const int y1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.px.y(), b.px.y(), c.px.y()}))));
  const double inv_area = 1.0 / area;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x, py = y;
      const double w0 = ((b.px.x() - px) * (c.px.y() - py) - (b.px.y() - py) * (c.px.x() - px)) * inv_area;
      const double w1 = ((c.px.x() - px) * (a.px.y() - py) - (c.px.y() - py) * (a.px.x() - px)) * inv_area;
      const double w2 = 1.0 - w0 - w1;
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      const double inv_z = w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z;
      shade(x, y, 1.0 / inv_z);
    }
  }
}

void raster_mesh_depth(const TriMesh& mesh, const Camera& cam, Grid2D& depth) {
  for (const auto& tri : mesh.triangles) {
    const Vec3& v0 = mesh.vertices[tri[0]];
    const Vec3& v1 = mesh.vertices[tri[1]];
    const Vec3& v2 = mesh.vertices[tri[2]];
    if (v0.z() <= kNear || v1.z() <= kNear || v2.z() <= kNear) continue;
    const ScreenVert a{cam.project(v0), 1.0 / v0.z()};
    const ScreenVert b{cam.project(v1), 1.0 / v1.z()};
    const ScreenVert c{cam.project(v2), 1.0 / v2.z()};
    raster_triangle(a, b, c, cam.width, cam.height, [&](int x, int y, double z) {
      double& d = depth.at(y, x, 0);
      if (z < d) d = z;
    });
  }
}

}  // namespace

Grid2D rasterize_depth(const TriMesh& mesh, const Camera& cam) {
  Grid2D depth(cam.height, cam.width, 1);
  std::fill(depth.data.begin(), depth.data.end(), kInf);
  raster_mesh_depth(mesh, cam, depth);
  return depth;
}

Mask rasterize_mask(const TriMesh& mesh, const Camera& cam) {
  const Grid2D depth = rasterize_depth(mesh, cam);
  Mask m(cam.height, cam.width);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = std::isfinite(depth.data[i]) ? 1 : 0;
  return m;
}

Mask rasterize_ortho_mask(const TriMesh& mesh, const OrthoCamera& cam) {
  Mask m(cam.height, cam.width);
  for (const auto& tri : mesh.triangles) {
    const ScreenVert a{cam.project(mesh.vertices[tri[0]]), 0};
    const ScreenVert b{cam.project(mesh.vertices[tri[1]]), 0};
    const ScreenVert c{cam.project(mesh.vertices[tri[2]]), 0};
    raster_triangle(a, b, c, cam.width, cam.height,
                    [&](int x, int y, double) { m.at(y, x) = 1; });
  }
  return m;
}

RenderMasks render_masks(const TriMesh& body, const TriMesh& object, const Camera& cam) {
  const Grid2D body_depth = rasterize_depth(body, cam);
  const Grid2D obj_depth = rasterize_depth(object, cam);
  RenderMasks out;
  out.human = Mask(cam.height, cam.width);
  out.object = Mask(cam.height, cam.width);
  out.object_unoccluded = Mask(cam.height, cam.width);
  for (size_t i = 0; i < out.human.data.size(); ++i) {
    const double bz = body_depth.data[i];
    const double oz = obj_depth.data[i];
    const bool has_body = std::isfinite(bz);
    const bool has_obj = std::isfinite(oz);
    out.object_unoccluded.data[i] = has_obj ? 1 : 0;
    out.human.data[i] = (has_body && (!has_obj || bz <= oz)) ? 1 : 0;
    out.object.data[i] = (has_obj && (!has_body || oz < bz)) ? 1 : 0;
  }
  return out;
}

double gt_visibility(const Mask& object_mask, const Mask& unoccluded_mask) {
  if (!object_mask.same_size(unoccluded_mask)) {
    throw LengthMismatch("gt_visibility: mask dimensions differ");
  }
  const int total = unoccluded_mask.count();
  if (total == 0) return 0.0;
  return static_cast<double>(object_mask.count()) / static_cast<double>(total);
}

}  // namespace hoi
