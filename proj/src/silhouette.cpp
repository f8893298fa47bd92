#include "hoi/opt/silhouette.hpp"

#include "hoi/geom/rotation.hpp"
#include "hoi/sim/raster.hpp"

namespace hoi {

double occlusion_silhouette_loss(const TriMesh& object_mesh, const Mask& object_mask,
                                 const Mask& human_mask, const Camera& cam) {
  if (!object_mask.same_size(human_mask)) {
    throw LengthMismatch("silhouette: mask dimensions differ");
  }
  const Mask render = rasterize_mask(object_mesh, cam);
  if (render.count() == 0) throw EmptyRender("silhouette: object does not rasterize");

  const Grid2D dt_mask = distance_transform(object_mask);
  double penalty = 0;
  int penalty_pixels = 0;
  for (int y = 0; y < render.height; ++y) {
    for (int x = 0; x < render.width; ++x) {
      if (!render.at(y, x) || human_mask.at(y, x)) continue;
      const double d = dt_mask.at(y, x, 0);
      penalty += std::isfinite(d) ? d : render.width + render.height;
      ++penalty_pixels;
    }
  }
  if (penalty_pixels > 0) penalty /= penalty_pixels;

  double coverage = 0;
  const int observed = object_mask.count();
  if (observed > 0) {
    const Grid2D dt_render = distance_transform(render);
    for (int y = 0; y < object_mask.height; ++y) {
      for (int x = 0; x < object_mask.width; ++x) {
        if (object_mask.at(y, x)) coverage += dt_render.at(y, x, 0);
      }
    }
    coverage /= observed;
  }
  // Normalized to image units so weights transfer across resolutions.
  return (penalty + coverage) / object_mask.width;
}

VecX occlusion_silhouette_loss_grad_fd(const TriMesh& object_template, const Vec6& rot6d,
                                       const Vec3& trans, const Mask& object_mask,
                                       const Mask& human_mask, const Camera& cam,
                                       double rot_step, double trans_step) {
  auto value = [&](const Vec6& r6, const Vec3& t) {
    return occlusion_silhouette_loss(object_template.transformed(rot6d_to_matrix(r6), t),
                                     object_mask, human_mask, cam);
  };
  VecX grad = VecX::Zero(9);
  for (int k = 0; k < 6; ++k) {
    Vec6 hi = rot6d, lo = rot6d;
    hi[k] += rot_step;
    lo[k] -= rot_step;
    grad[k] = (value(hi, trans) - value(lo, trans)) / (2 * rot_step);
  }
  for (int k = 0; k < 3; ++k) {
    Vec3 hi = trans, lo = trans;
    hi[k] += trans_step;
    lo[k] -= trans_step;
    grad[6 + k] = (value(rot6d, hi) - value(rot6d, lo)) / (2 * trans_step);
  }
  return grad;
}

SilhouetteContext SilhouetteContext::build(const Mask& object_mask, const Mask& human_mask,
                                           const Camera& cam, int max_samples) {
  SilhouetteContext ctx;
  ctx.cam = cam;
  ctx.human_mask = human_mask;
  const int observed = object_mask.count();
  ctx.empty = observed == 0;
  ctx.dt = distance_transform(object_mask);
  if (!ctx.empty) {
    const int stride = std::max(1, observed / std::max(1, max_samples));
    int seen = 0;
    for (int y = 0; y < object_mask.height; ++y) {
      for (int x = 0; x < object_mask.width; ++x) {
        if (!object_mask.at(y, x)) continue;
        if (seen % stride == 0) ctx.mask_samples.emplace_back(x, y);
        ++seen;
      }
    }
  }
  return ctx;
}

double point_silhouette_loss(const SilhouetteContext& ctx, const std::vector<Vec3>& verts,
                             std::vector<Vec3>* grad_verts) {
  if (grad_verts) grad_verts->assign(verts.size(), Vec3::Zero());
  if (ctx.empty) return 0.0;  // fully occluded: nothing to explain

  const double inv_w = 1.0 / ctx.cam.width;
  std::vector<Vec2> projected(verts.size());
  std::vector<uint8_t> usable(verts.size(), 0);
  int active = 0;
  for (size_t i = 0; i < verts.size(); ++i) {
    if (verts[i].z() <= 0.05) continue;
    projected[i] = ctx.cam.project(verts[i]);
    const int px = static_cast<int>(std::lround(projected[i].x()));
    const int py = static_cast<int>(std::lround(projected[i].y()));
    usable[i] = 1;
    // Pixels explained by the human occluder are excluded from the penalty.
    if (px >= 0 && px < ctx.human_mask.width && py >= 0 && py < ctx.human_mask.height &&
        ctx.human_mask.at(py, px)) {
      usable[i] = 2;  // projectable but not penalized
    }
    if (usable[i] == 1) ++active;
  }

  double penalty = 0;
  if (active > 0) {
    for (size_t i = 0; i < verts.size(); ++i) {
      if (usable[i] != 1) continue;
      const double d = bilinear_sample(ctx.dt, projected[i])[0];
      penalty += d;
      if (grad_verts) {
        const MatX g_uv = bilinear_sample_grad(ctx.dt, projected[i]);
        const Vec2 g(g_uv(0, 0), g_uv(0, 1));
        (*grad_verts)[i] += (ctx.cam.project_jacobian(verts[i]).transpose() * g) *
                            (inv_w / active);
      }
    }
    penalty = penalty / active;
  }

  double coverage = 0;
  if (!ctx.mask_samples.empty()) {
    for (const auto& q : ctx.mask_samples) {
      double best = std::numeric_limits<double>::max();
      int best_i = -1;
      for (size_t i = 0; i < verts.size(); ++i) {
        if (!usable[i]) continue;
        const double d2 = (projected[i] - q).squaredNorm();
        if (d2 < best) {
          best = d2;
          best_i = static_cast<int>(i);
        }
      }
      if (best_i < 0) continue;
      const double d = std::sqrt(std::max(best, 1e-18));
      coverage += d;
      if (grad_verts && d > 1e-9) {
        const Vec2 dir = (projected[best_i] - q) / d;
        (*grad_verts)[best_i] += (ctx.cam.project_jacobian(verts[best_i]).transpose() * dir) *
                                 (inv_w / ctx.mask_samples.size());
      }
    }
    coverage /= ctx.mask_samples.size();
  }
  return (penalty + coverage) * inv_w;
}

}  // namespace hoi
