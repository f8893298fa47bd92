#include "hoi/field/discovery.hpp"

#include "hoi/parallel.hpp"

namespace hoi {

std::vector<Vec3> make_seeds(const Vec3& center, double box_half, int count, uint64_t seed) {
  Rng rng(hash_combine(seed, 0x7365656473ull));
  std::vector<Vec3> out(count);
  for (auto& p : out) {
    p = center + Vec3(rng.uniform(-box_half, box_half), rng.uniform(-box_half, box_half),
                      rng.uniform(-box_half, box_half));
  }
  return out;
}

std::vector<Vec3> discover_surface_points(const OracleField& field, SurfaceTarget target,
                                          const std::vector<Vec3>& seeds, int steps,
                                          const DiscoveryConfig& cfg) {
  if (seeds.empty()) throw EmptyInput("discover_surface_points: no seeds");
  if (steps < 1) throw DegenerateInput("discover_surface_points: steps must be >= 1");

  auto dist_of = [&](const Vec3& p) {
    return target == SurfaceTarget::kObject ? field.object_udf(p).dist : field.human_udf(p).dist;
  };
  auto step_once = [&](Vec3& p) {
    if (cfg.analytic_gradient) {
      const UdfResult r =
          target == SurfaceTarget::kObject ? field.object_udf(p) : field.human_udf(p);
      if (r.on_surface) return;
      p -= r.dist * r.grad;
    } else {
      const double d = dist_of(p);
      if (d < 1e-9) return;
      Vec3 g;
      for (int k = 0; k < 3; ++k) {
        Vec3 hi = p, lo = p;
        hi[k] += cfg.fd_step;
        lo[k] -= cfg.fd_step;
        g[k] = (dist_of(hi) - dist_of(lo)) / (2 * cfg.fd_step);
      }
      const double gn = g.norm();
      if (gn < 1e-9) return;
      p -= d * g / gn;
    }
  };

  std::vector<Vec3> pts = seeds;
  std::vector<uint8_t> keep(pts.size(), 0);
  parallel_for(static_cast<std::ptrdiff_t>(pts.size()), [&](std::ptrdiff_t i) {
    for (int s = 0; s < steps; ++s) step_once(pts[i]);
    keep[i] = dist_of(pts[i]) <= cfg.keep_threshold ? 1 : 0;
  });

  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) out.push_back(pts[i]);
  }
  if (out.empty()) throw NoConvergedPoints("discover_surface_points: all seeds discarded");
  return out;
}

ObjectPose predict_object_pose(const OracleField& field, const std::vector<Vec3>& surface_points) {
  if (surface_points.empty()) throw NoConvergedPoints("predict_object_pose: no surface points");
  Mat3 rot_acc = Mat3::Zero();
  Vec3 trans_acc = Vec3::Zero();
  for (const auto& p : surface_points) {
    const FieldSample s = field.query(p);
    rot_acc += s.rot.matrix();
    trans_acc += s.trans;
  }
  const double n = static_cast<double>(surface_points.size());
  ObjectPose pose;
  pose.rot = symmetric_orthogonalize(rot_acc / n);
  pose.trans = trans_acc / n;
  return pose;
}

double predict_visibility(const OracleField& field, const std::vector<Vec3>& surface_points) {
  if (surface_points.empty()) throw NoConvergedPoints("predict_visibility: no surface points");
  double acc = 0;
  for (const auto& p : surface_points) acc += field.query(p).vis;
  return std::clamp(acc / static_cast<double>(surface_points.size()), 0.0, 1.0);
}

FramePrediction predict_frame(const OracleField& field, const Vec3& seed_center,
                              const DiscoveryConfig& cfg) {
  const auto seeds = make_seeds(seed_center, cfg.box_half, cfg.seed_count, cfg.seed);
  const auto pts = discover_surface_points(field, SurfaceTarget::kObject, seeds, cfg.steps, cfg);
  FramePrediction out;
  out.pose = predict_object_pose(field, pts);
  out.vis = predict_visibility(field, pts);
  return out;
}

}  // namespace hoi
