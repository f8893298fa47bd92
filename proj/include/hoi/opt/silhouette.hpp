#pragma once

#include "hoi/geom/camera.hpp"
#include "hoi/geom/grid2d.hpp"
#include "hoi/geom/mesh.hpp"

namespace hoi {

// Occlusion-aware silhouette loss (rasterized form): the posed object is
// z-buffer rasterized; rendered pixels under the human mask are excluded
// from the penalty region. Loss = mean distance-transform value of the
// observed object mask over the remaining rendered pixels, plus a coverage
// deficit (mean DT of the render over observed-mask pixels). Zero when the
// render matches the mask exactly and when the object is entirely explained
// by the human occluder. Throws EmptyRender when nothing rasterizes.
double occlusion_silhouette_loss(const TriMesh& object_mesh, const Mask& object_mask,
                                 const Mask& human_mask, const Camera& cam);

// Finite-difference pose gradient of the rasterized loss (6D rotation +
// translation), for use where the exact loss drives an optimizer.
VecX occlusion_silhouette_loss_grad_fd(const TriMesh& object_template, const Vec6& rot6d,
                                       const Vec3& trans, const Mask& object_mask,
                                       const Mask& human_mask, const Camera& cam,
                                       double rot_step, double trans_step);

// Point-sampled differentiable form used inside the joint optimizer: mean
// bilinear DT at projected vertices whose pixel is not explained by the
// human mask, plus mean distance from sampled observed-mask pixels to their
// nearest projected vertex (pixels, normalized by image size).
struct SilhouetteContext {
  Grid2D dt;                       // DT of the observed object mask
  std::vector<Vec2> mask_samples;  // subsampled observed-mask pixel centers
  Mask human_mask;
  Camera cam;
  bool empty = false;              // observed mask has no pixels

  static SilhouetteContext build(const Mask& object_mask, const Mask& human_mask,
                                 const Camera& cam, int max_samples);
};

double point_silhouette_loss(const SilhouetteContext& ctx, const std::vector<Vec3>& verts,
                             std::vector<Vec3>* grad_verts);

}  // namespace hoi
