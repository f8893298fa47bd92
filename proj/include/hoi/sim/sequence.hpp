#pragma once

#include <string>
#include <vector>

#include "hoi/body/body_model.hpp"
#include "hoi/geom/grid2d.hpp"
#include "hoi/sim/script.hpp"

namespace hoi {

struct ObjectPose {
  Rotation rot;
  Vec3 trans = Vec3::Zero();
};

struct FrameObservation {
  MatX keypoints;   // J x 2, pixels
  VecX confidence;  // J, in [0, 1]
  Mask human_mask;
  Mask object_mask;
};

// Frames where the object touches a designated body part (from the script).
struct ContactSpan {
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  int part_id = 0;
};

// One simulated interaction: ground truth states, observations and
// per-frame initial body estimates (the per-frame regressor stand-in; its
// translations are zeroed, fitting recovers them from keypoints).
struct Sequence {
  double fps = 30.0;
  std::string template_id;
  std::string program;
  uint64_t seed = 0;
  Camera camera;

  std::vector<BodyState> gt_body;
  std::vector<ObjectPose> gt_object;
  std::vector<double> gt_vis;
  std::vector<Mask> unoccluded_object;
  std::vector<FrameObservation> obs;
  std::vector<BodyState> init_body;
  std::vector<ContactSpan> contacts;

  int frames() const { return static_cast<int>(gt_body.size()); }
  void validate() const;
  bool equals(const Sequence& o) const;
  // Time-reversed copy (test helper for symmetry properties).
  Sequence reversed() const;
};

// Versioned binary container. Lossless: doubles stored bit-exactly, masks
// run-length encoded.
void save_sequence(const Sequence& seq, const std::string& path);
Sequence load_sequence(const std::string& path);

}  // namespace hoi
