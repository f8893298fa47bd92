#include "hoi/field/triplane.hpp"

#include "hoi/sim/raster.hpp"

namespace hoi {

Triplane triplane_render(const TriMesh& body, double scale, int size) {
  if (body.vertices.empty()) throw EmptyInput("triplane_render: empty mesh");
  Triplane tri;
  tri.origin = body.centroid();
  const OrthoAxis axes[3] = {OrthoAxis::kRight, OrthoAxis::kBack, OrthoAxis::kTop};
  for (int v = 0; v < Triplane::kViews; ++v) {
    OrthoCamera cam;
    cam.axis = axes[v];
    cam.scale = scale;
    cam.width = cam.height = size;
    cam.origin = tri.origin;
    tri.views[v] = cam;
    const Mask sil = rasterize_ortho_mask(body, cam);
    tri.grids[v] = Grid2D(size, size, 1);
    for (size_t i = 0; i < sil.data.size(); ++i) tri.grids[v].data[i] = sil.data[i] ? 1.0 : 0.0;
  }
  return tri;
}

VecX triplane_features(const Triplane& tri, const Vec3& p) {
  VecX out(tri.feature_dim());
  int offset = 0;
  for (int v = 0; v < Triplane::kViews; ++v) {
    const VecX f = bilinear_sample(tri.grids[v], tri.views[v].project(p));
    out.segment(offset, f.size()) = f;
    offset += static_cast<int>(f.size());
  }
  return out;
}

}  // namespace hoi
