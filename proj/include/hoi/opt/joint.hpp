#pragma once

#include "hoi/body/body_model.hpp"
#include "hoi/field/field.hpp"
#include "hoi/fit/adam.hpp"
#include "hoi/opt/silhouette.hpp"
#include "hoi/sim/sequence.hpp"

namespace hoi {

struct JointConfig {
  // Energy weights.
  double lambda_reg = 2.5e-4;
  double lambda_ah = 1e4;
  double lambda_h = 1e4;
  double lambda_p = 1e-4;
  double lambda_o = 900;
  double lambda_occ = 9e-4;
  double lambda_ao = 225;
  double lambda_c = 900;
  // Optional linear annealing of lambda_p (added per outer iteration).
  double lambda_p_anneal = 0;
  // Clamps and contact threshold.
  double delta_h = 0.10;
  double delta_o = 0.10;
  double contact_eps = 0.02;
  // Two-stage schedule.
  int stage1_iters = 300;
  int stage2_iters = 500;
  double grad_tol = 1e-4;
  double lr_rot = 1e-2;
  double lr_trans = 1e-3;
  int contact_refresh = 25;
  // Term evaluation subsampling.
  int body_vertex_stride = 4;
  int object_vertex_stride = 1;
  int silhouette_mask_samples = 64;
  // Exact rasterized silhouette with finite-difference gradients instead of
  // the point-sampled differentiable form.
  bool raster_silhouette = false;
  double raster_fd_rot_step = 5e-3;
  double raster_fd_trans_step = 2e-3;

  void validate() const;
  std::string to_json() const;
  static JointConfig from_json(const std::string& text);
};

// Full tracked state of a sequence: per-frame body pose/translation with a
// shared shape, per-frame object pose, per-frame (predicted) visibility.
struct TrackState {
  std::vector<BodyState> body;  // per-frame pose6d + translation
  VecX beta;
  std::vector<Rotation> obj_rot;
  std::vector<Vec3> obj_trans;
  std::vector<double> visibility;
  bool has_object = true;

  int frames() const { return static_cast<int>(body.size()); }
  BodyState body_state(int i) const;
  void validate() const;
};

void save_track_state(const TrackState& state, const std::string& path);
TrackState load_track_state(const std::string& path);

// Contact sets: per frame and body part, the body vertex indices predicted
// to touch the object and the object vertex indices predicted to touch that
// part. Discrete; refreshed between optimizer chunks, not differentiated.
struct ContactSets {
  struct FramePart {
    std::vector<int> body_vertices;
    std::vector<int> object_vertices;
  };
  // [frame][part-1]
  std::vector<std::array<FramePart, BodyModel::kParts>> frames;
};

ContactSets discover_contacts(const TrackState& state, const std::vector<FieldPtr>& fields,
                              const BodyModel& model, const TriMesh& object_template,
                              const JointConfig& cfg);

// Eq-style terms. Values are returned; gradients are accumulated when the
// pointers are non-null. Gradient layouts: theta is frames x 147 stacked,
// beta 10, object frames x 9 (6D rotation then translation).
double human_data_term(const TrackState& state, const std::vector<FieldPtr>& fields,
                       const BodyModel& model, const JointConfig& cfg, VecX* grad_theta,
                       VecX* grad_beta);

double object_data_term(const TrackState& state, const std::vector<FieldPtr>& fields,
                        const std::vector<SilhouetteContext>& silhouettes,
                        const TriMesh& object_template, const JointConfig& cfg, VecX* grad_obj);

double contact_term(const TrackState& state, const ContactSets& sets, const BodyModel& model,
                    const TriMesh& object_template, const JointConfig& cfg, VecX* grad_obj);

// Pose and shape prior (Gaussian stand-in).
double reg_term(const TrackState& state, const JointConfig& cfg, VecX* grad_theta,
                VecX* grad_beta);

struct JointResult {
  TrackState state;
  OptResult stage1;
  OptResult stage2;
};

// Two-stage visibility-aware optimization: stage 1 fits body pose and shape
// against the human data term + prior; stage 2 fits object poses against the
// object and contact data terms. Throws NonFiniteEnergy naming the stage.
JointResult joint_optimize(const Sequence& seq, const std::vector<FieldPtr>& fields,
                           const TrackState& init, const BodyModel& model,
                           const JointConfig& cfg);

}  // namespace hoi
