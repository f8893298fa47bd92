#pragma once

#include "hoi/body/body_model.hpp"
#include "hoi/fit/adam.hpp"
#include "hoi/sim/sequence.hpp"

namespace hoi {

struct FitConfig {
  double lambda_j2d = 0.09;
  double lambda_reg = 1e-5;
  double lambda_a = 25.0;
  double lambda_pi = 900.0;
  int max_iters = 1000;
  double grad_tol = 1e-3;
  double lr_rot = 1e-2;
  double lr_trans = 1e-3;
  // Acceleration term vertex subsample (1 = every proxy vertex).
  int accel_vertex_stride = 4;

  void validate() const;
  std::string to_json() const;
  static FitConfig from_json(const std::string& text);
};

// Camera-space body trajectory with one shared shape.
struct SmplTTrajectory {
  enum Flag : uint8_t { kInitialized = 1, kOptimized = 2, kSmoothed = 4 };

  VecX beta;                      // shared across the sequence
  std::vector<VecX> pose6d;       // per frame, 24 x 6
  std::vector<Vec3> translation;  // per frame
  std::vector<uint8_t> flags;

  int frames() const { return static_cast<int>(pose6d.size()); }
  BodyState state(int i) const;
  VecX pack() const;  // frames * 147
  void unpack(const VecX& params);
  // HVOP input row (147): pose followed by translation.
  VecX theta(int i) const;
};

// Shape = mean of per-frame initial shapes; poses copied; translations from
// a closed-form linear solve of the reprojection constraints of the initial
// pose against the observed keypoints (depth from keypoint scale).
SmplTTrajectory init_trajectory(const Sequence& seq, const BodyModel& model);

// Eq-style temporal energy: confidence-weighted squared pixel reprojection,
// Gaussian pose prior on joint angles, squared vertex accelerations, and an
// L2 pull toward the initial poses. Returns the value; `grad` (frames*147)
// is filled when non-null.
double e_smplt(const SmplTTrajectory& traj, const Sequence& seq, const BodyModel& model,
               const FitConfig& cfg, VecX* grad);

SmplTTrajectory fit_smplt(const Sequence& seq, const BodyModel& model, const FitConfig& cfg,
                          OptResult* opt_result = nullptr);

// Zero-phase moving average over pose (6D) and translation with reflection
// padding; window must be odd. window=1 is the identity.
SmplTTrajectory smooth_trajectory(const SmplTTrajectory& traj, int window);

}  // namespace hoi
