#pragma once

#include "hoi/field/field.hpp"

namespace hoi {

enum class SurfaceTarget { kObject, kHuman };

struct DiscoveryConfig {
  int seed_count = 500;
  double box_half = 0.15;  // seeds uniform in a 30 cm box
  int steps = 10;
  double keep_threshold = 0.005;  // discard points ending farther than 5 mm
  double fd_step = 0.001;         // central-difference step for the gradient
  // The oracle's distance heads are exact, so the closest-point gradient is
  // available; the finite-difference route stays for generic fields.
  bool analytic_gradient = true;
  uint64_t seed = 0;
};

std::vector<Vec3> make_seeds(const Vec3& center, double box_half, int count, uint64_t seed);

// NDF-style projection p <- p - d * grad(d) onto the requested surface.
// Throws NoConvergedPoints when every seed is discarded.
std::vector<Vec3> discover_surface_points(const OracleField& field, SurfaceTarget target,
                                          const std::vector<Vec3>& seeds, int steps,
                                          const DiscoveryConfig& cfg = {});

// Mean of the translation votes; rotation votes averaged and re-projected by
// symmetric orthogonalization.
ObjectPose predict_object_pose(const OracleField& field, const std::vector<Vec3>& surface_points);

// Mean of the visibility votes, clamped to [0, 1].
double predict_visibility(const OracleField& field, const std::vector<Vec3>& surface_points);

// Discovery + voting for one frame, seeded around `seed_center`.
struct FramePrediction {
  ObjectPose pose;
  double vis = 0;
};
FramePrediction predict_frame(const OracleField& field, const Vec3& seed_center,
                              const DiscoveryConfig& cfg);

}  // namespace hoi
