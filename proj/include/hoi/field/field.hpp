#pragma once

#include <memory>

#include "hoi/body/body_model.hpp"
#include "hoi/field/triplane.hpp"
#include "hoi/geom/kdtree.hpp"
#include "hoi/geom/udf.hpp"
#include "hoi/sim/sequence.hpp"

namespace hoi {

// One interaction-field query result.
struct FieldSample {
  double d_h = 0;   // unsigned distance to the body surface (m)
  double d_o = 0;   // unsigned distance to the object surface (m)
  int part = 0;     // body part label in {1..K}
  VecX part_probs;  // soft part distribution (K)
  Rotation rot;     // object rotation vote
  Vec3 trans = Vec3::Zero();
  double vis = 0;   // visibility in [0, 1]
};

// Noise model of the field oracle. Pose noise grows with occlusion (1 - v);
// disabling conditioning inflates translation noise and adds a per-frame
// rigid scene depth shift that breaks cross-frame translation coherence.
struct FieldNoiseConfig {
  double rot_sigma_deg_vis = 2.0;
  double rot_sigma_deg_occl = 40.0;
  double trans_sigma_vis = 0.02;
  double trans_sigma_occl = 0.20;
  double point_rot_jitter_deg = 1.5;
  double point_trans_jitter = 0.010;
  double point_vis_jitter = 0.03;
  double vis_sigma = 0.02;
  double part_flip_prob = 0.15;
  double part_boundary_band = 0.03;
  double part_temperature = 0.02;
  double cond_off_trans_scale = 2.5;
  double cond_off_scene_depth_sigma = 0.15;
  double cond_off_scene_lateral_sigma = 0.02;
  uint64_t seed = 0;

  static FieldNoiseConfig zero();
  std::string to_json() const;
  static FieldNoiseConfig from_json(const std::string& text);
};

// Analytic oracle realization of the per-frame interaction field: distances
// are exact against the believed geometry (ground truth body; object
// template posed at the noisy pose belief); pose, part and visibility heads
// carry calibrated noise. Queries are pure and deterministic given
// (frame, point, seed). Immutable and shareable.
class OracleField {
 public:
  OracleField(const BodyModel& model, const BodyState& gt_body, const TriMesh& object_tmpl,
              const ObjectPose& gt_object, double gt_vis, const Camera& cam,
              const FieldNoiseConfig& cfg, bool conditioning, int frame_index);

  FieldSample query(const Vec3& p) const;

  // Exact closest-point routes used when the caller may exploit analytic
  // gradients (the distance heads of this oracle carry no additive noise).
  UdfResult object_udf(const Vec3& p) const { return udf_query(*object_bvh_, p); }
  UdfResult human_udf(const Vec3& p) const { return udf_query(*body_bvh_, p); }

  VecX part_probs(const Vec3& p, int& label) const;

  // Categorical cross entropy of the part head against a target label, with
  // the analytic gradient w.r.t. the query point. Label-flip corruption is
  // treated as data (zero gradient); a target part absent from the local
  // neighborhood contributes a capped constant.
  double part_cross_entropy(const Vec3& p, int target_label, Vec3* grad_p, int& pred_label) const;

  const TriMesh& believed_object() const { return believed_object_; }
  const TriMesh& believed_body() const { return believed_body_; }
  const ObjectPose& believed_pose() const { return believed_pose_; }
  double believed_vis() const { return believed_vis_; }
  double gt_vis() const { return gt_vis_; }
  bool conditioning() const { return conditioning_; }
  const Camera& camera() const { return cam_; }

  Triplane render_triplane() const { return triplane_render(believed_body_); }

  struct PartQueryImpl;

 private:
  Camera cam_;
  FieldNoiseConfig cfg_;
  bool conditioning_;
  double gt_vis_;
  uint64_t frame_seed_;

  TriMesh believed_body_;
  TriMesh believed_object_;
  ObjectPose believed_pose_;
  double believed_vis_ = 0;

  std::unique_ptr<TriBvh> body_bvh_;
  std::unique_ptr<TriBvh> object_bvh_;
  std::unique_ptr<KdTree> body_vertex_tree_;
};

using FieldPtr = std::shared_ptr<const OracleField>;

// Per-frame fields for a whole sequence (built in parallel, deterministic).
std::vector<FieldPtr> build_fields(const Sequence& seq, const BodyModel& model,
                                   const FieldNoiseConfig& cfg, bool conditioning);

}  // namespace hoi
