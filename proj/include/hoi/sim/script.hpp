#pragma once

#include <string>
#include <vector>

#include "hoi/common.hpp"

namespace hoi {

struct OcclusionSpan {
  double start_s = 0;
  double end_s = 0;
  double ramp_s = 0.4;  // smooth transition into / out of the occlusion
};

// Observation noise applied by the simulator (stand-in for detector and
// per-frame regressor front-ends).
struct NoiseConfig {
  double keypoint_sigma_px = 2.0;
  double confidence_dropout = 0.05;
  double init_pose_sigma = 0.03;  // jitter on per-frame initial pose (6D)
  double init_beta_sigma = 0.2;

  bool zero() const {
    return keypoint_sigma_px == 0 && confidence_dropout == 0 && init_pose_sigma == 0 &&
           init_beta_sigma == 0;
  }
};

// Scripted interaction: named motion program, object template, occlusion
// schedule and noise. Everything downstream is deterministic given `seed`.
struct InteractionScript {
  std::string program = "carry_box";
  std::string template_id = "box";
  double duration_s = 10.0;
  double fps = 30.0;
  uint64_t seed = 1;
  std::vector<OcclusionSpan> occlusions;
  NoiseConfig noise;
  double max_angular_speed_deg_s = 180.0;

  int frame_count() const { return static_cast<int>(duration_s * fps + 0.5); }
  void validate() const;

  std::string to_json() const;
  static InteractionScript from_json(const std::string& text);
  static InteractionScript load(const std::string& path);
  void save(const std::string& path) const;
};

std::vector<std::string> program_names();

}  // namespace hoi
