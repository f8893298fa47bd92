#pragma once

#include "hoi/sim/sequence.hpp"

namespace hoi {

// Ground-truth motion for one frame, before observations are rendered.
struct MotionFrame {
  BodyState body;
  ObjectPose object;
  int contact_part = 0;  // 0 when not in contact
};

// Deterministic given script.seed. Body and object trajectories are smooth;
// during contact spans the object surface touches the designated body part
// within 5 mm (the attachment offset is solved for at generation time).
std::vector<MotionFrame> sample_motion(const InteractionScript& script, const BodyModel& model);

// Fraction of the object hidden by the scheduled occluder at time t (0..1).
double occlusion_factor(const InteractionScript& script, double t);

// Full generation: motion, z-buffered masks, scheduled occluder, visibility,
// observations, and script-configured observation noise.
Sequence generate_sequence(const InteractionScript& script, const BodyModel& model);

// Applies keypoint noise, confidence dropout and initial body-state jitter.
// Ground-truth fields are untouched. Deterministic given seed.
Sequence perturb_observations(const Sequence& clean, const NoiseConfig& cfg, uint64_t seed);

}  // namespace hoi
