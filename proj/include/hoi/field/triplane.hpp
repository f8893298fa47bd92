#pragma once

#include "hoi/geom/camera.hpp"
#include "hoi/geom/grid2d.hpp"
#include "hoi/geom/mesh.hpp"

namespace hoi {

// Three orthographic silhouette grids (right, back, top) with a shared
// origin at the conditioning body's centroid. Feature grids are sampled by
// projecting query points with the same projection used for rendering.
struct Triplane {
  static constexpr int kViews = 3;
  OrthoCamera views[kViews];
  Grid2D grids[kViews];
  Vec3 origin = Vec3::Zero();

  int feature_dim() const {
    return grids[0].channels + grids[1].channels + grids[2].channels;
  }
};

// Renders binary silhouettes at 256 px/m on 512x512 grids (defaults).
Triplane triplane_render(const TriMesh& body, double scale = 256.0, int size = 512);

// Projects p into the three planes, bilinearly samples each grid and
// concatenates in (right, back, top) order.
VecX triplane_features(const Triplane& tri, const Vec3& p);

}  // namespace hoi
