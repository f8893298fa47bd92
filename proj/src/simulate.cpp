#include "hoi/sim/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "hoi/geom/udf.hpp"
#include "hoi/parallel.hpp"
#include "hoi/sim/objects.hpp"
#include "hoi/sim/raster.hpp"

namespace hoi {

namespace {

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3 - 2 * x);
}

struct MotionParams {
  double depth = 3.0;
  double sway_x = 0.55;
  double path_freq = 0.07;
  double stride_freq = 1.0;
  double hip_amp = 0.35;
  double knee_amp = 0.45;
  double arm_amp = 0.30;
  double yaw_amp = 0.25;
  double yaw_freq = 0.10;
  double bob_amp = 0.02;
  double phase = 0;
  // program-specific
  double swing_amp = 0.55;
  double swing_freq = 0.42;
  double orbit_amp = 0.75;
  double orbit_freq = 0.13;
  Vec3 drift_axis = Vec3(0.3, 1.0, 0.2).normalized();
  double drift_rate = deg2rad(28);
  Vec3 drift_start = Vec3(-0.45, 0.15, 3.0);
  Vec3 drift_vel = Vec3(0.09, 0.0, 0.01);
  Rotation drift_rot0;
};

MotionParams derive_params(const InteractionScript& script) {
  Rng rng(hash_combine(script.seed, 0x6d6f74696f6eull));
  MotionParams p;
  p.depth = 3.0 + rng.uniform(-0.25, 0.25);
  p.sway_x = 0.45 + rng.uniform(0, 0.2);
  p.path_freq = 0.06 + rng.uniform(0, 0.03);
  p.stride_freq = 0.9 + rng.uniform(0, 0.25);
  p.hip_amp = 0.3 + rng.uniform(0, 0.12);
  p.knee_amp = 0.4 + rng.uniform(0, 0.15);
  p.arm_amp = 0.25 + rng.uniform(0, 0.12);
  p.yaw_amp = 0.2 + rng.uniform(0, 0.12);
  p.yaw_freq = 0.08 + rng.uniform(0, 0.05);
  p.phase = rng.uniform(0, 2 * kPi);
  p.swing_amp = 0.45 + rng.uniform(0, 0.2);
  p.swing_freq = 0.35 + rng.uniform(0, 0.15);
  p.orbit_amp = 0.6 + rng.uniform(0, 0.3);
  p.orbit_freq = 0.10 + rng.uniform(0, 0.06);
  p.drift_axis = rng.unit_vector();
  p.drift_rate = deg2rad(20 + rng.uniform(0, 15));
  p.drift_start = Vec3(-0.45 + rng.uniform(-0.1, 0.1), 0.1 + rng.uniform(-0.05, 0.1),
                       p.depth + rng.uniform(-0.2, 0.2));
  p.drift_vel = Vec3(0.9 / std::max(script.duration_s, 1.0), 0.0, rng.uniform(-0.02, 0.02));
  p.drift_rot0 = random_rotation(rng);
  return p;
}

void set_joint(BodyState& s, int joint, const Rotation& r) {
  s.pose6d.segment<6>(joint * 6) = r.to_6d();
}

// Walking body with program-specific arm overrides. All angles are smooth
// functions of t.
BodyState body_at(const InteractionScript& script, const MotionParams& p, double t) {
  BodyState s;
  const double wt = 2 * kPi * p.stride_freq * t + p.phase;

  double crouch = 0.0;
  double gait = 1.0;
  if (script.program == "orbit_board") gait = 0.0;
  if (script.program == "swing_rod") gait = 0.25;
  if (script.program == "set_down") {
    const double t_norm = t / script.duration_s;
    // walk, ease to a stop, crouch with zero velocity at the release point,
    // then rise and idle
    gait = 1.0 - smoothstep((t_norm - 0.30) / 0.12);
    const double down = smoothstep((t_norm - 0.42) / 0.18);
    const double up = smoothstep((t_norm - 0.68) / 0.15);
    crouch = down - up;
  }

  const double sway = gait * p.sway_x * std::sin(2 * kPi * p.path_freq * t + p.phase);
  const double bob = gait * p.bob_amp * std::sin(2 * wt);
  double yaw = kPi + p.yaw_amp * std::sin(2 * kPi * p.yaw_freq * t + 0.7 * p.phase);
  if (script.program == "orbit_board") {
    yaw = kPi + p.orbit_amp * std::sin(2 * kPi * p.orbit_freq * t + p.phase);
  }

  s.translation = Vec3(sway, bob + 0.12 * crouch, p.depth + 0.3 * gait *
                       std::sin(2 * kPi * p.path_freq * 0.8 * t + 1.3 * p.phase));
  set_joint(s, 0, Rotation::about_y(yaw));

  const double leg = gait * p.hip_amp * std::sin(wt) - 0.5 * crouch;
  const double leg_r = gait * p.hip_amp * std::sin(wt + kPi) - 0.5 * crouch;
  set_joint(s, 1, Rotation::about_x(leg));
  set_joint(s, 2, Rotation::about_x(leg_r));
  const double knee_l = gait * p.knee_amp * 0.5 * (1 - std::cos(wt)) + 0.9 * crouch;
  const double knee_r = gait * p.knee_amp * 0.5 * (1 - std::cos(wt + kPi)) + 0.9 * crouch;
  set_joint(s, 4, Rotation::about_x(-knee_l));
  set_joint(s, 5, Rotation::about_x(-knee_r));

  set_joint(s, 6, Rotation::about_y(gait * 0.08 * std::sin(wt)));
  set_joint(s, 12, Rotation::about_y(-gait * 0.05 * std::sin(wt)));

  const bool carrying = script.program == "carry_box" || script.program == "orbit_board" ||
                        script.program == "set_down";
  if (carrying) {
    // Arms bent forward, small residual sway; the object itself is attached
    // to the chest so the arm pose is cosmetic.
    const double a = 0.06 * std::sin(wt);
    set_joint(s, 16, Rotation::about_z(0.9 + a) * Rotation::about_y(-0.5));
    set_joint(s, 17, Rotation::about_z(-0.9 - a) * Rotation::about_y(0.5));
    set_joint(s, 18, Rotation::about_y(-0.7));
    set_joint(s, 19, Rotation::about_y(0.7));
  } else if (script.program == "swing_rod") {
    const double swing = p.swing_amp * std::sin(2 * kPi * p.swing_freq * t + p.phase) +
                         0.3 * p.swing_amp * std::sin(2 * kPi * 1.7 * p.swing_freq * t);
    set_joint(s, 17, Rotation::about_z(-0.9) * Rotation::about_x(swing));
    set_joint(s, 19, Rotation::about_x(0.5 * swing) * Rotation::about_y(0.35));
    set_joint(s, 16, Rotation::about_z(0.25 * std::sin(wt)));
    set_joint(s, 18, Rotation::about_y(-0.3));
  } else {
    const double arms = gait * p.arm_amp * std::sin(wt + kPi);
    set_joint(s, 16, Rotation::about_z(1.25) * Rotation::about_x(arms));
    set_joint(s, 17, Rotation::about_z(-1.25) * Rotation::about_x(-arms));
    set_joint(s, 18, Rotation::about_y(-0.25));
    set_joint(s, 19, Rotation::about_y(0.25));
  }
  return s;
}

struct Attachment {
  int joint = 9;
  int part = 1;
  Rotation rot;
  Vec3 trans = Vec3::Zero();
};

// Solves the attachment translation along an approach direction so the
// object surface sits ~1.5 mm from the designated part at the reference
// frame. Rigid attachment then keeps contact through the sequence.
Attachment solve_attachment(const InteractionScript& script, const BodyModel& model,
                            const MotionParams& p, const TriMesh& tmpl) {
  Attachment at;
  Vec3 base = Vec3::Zero();
  Vec3 dir(0, 0, 1);
  if (script.program == "swing_rod") {
    at.joint = 23;  // right hand
    at.part = 14;
    at.rot = Rotation::about_z(kPi / 2);  // rod axis along the hand's y
    base = Vec3(0, 0.25, 0);              // extend beyond the fingers
    dir = Vec3(0, 0, 1);
  } else {
    at.joint = 9;  // chest
    at.part = 1;
    at.rot = Rotation::identity();
    base = Vec3(0, 0.02, 0);
    dir = Vec3(0, 0, 1);
  }

  const BodyState ref = body_at(script, p, 0.0);
  const auto fk = model.forward(ref);
  const Mat3 joint_rot = fk.r_global[at.joint];
  const Vec3 joint_pos = fk.joints[at.joint];

  // Part vertices in the joint frame.
  std::vector<Vec3> part_local;
  for (int v : model.part_vertices(at.part)) {
    part_local.push_back(joint_rot.transpose() * (fk.mesh.vertices[v] - joint_pos));
  }
  TriBvh tmpl_bvh(tmpl);
  auto min_dist = [&](double d) {
    double best = 1e18;
    const Vec3 offset = base + d * dir;
    for (const auto& q : part_local) {
      const Vec3 in_obj = at.rot.inverse() * (q - offset);
      best = std::min(best, udf_query(tmpl_bvh, in_obj).dist);
    }
    return best;
  };

  const double target = 0.0015;
  double best_d = 0.4, prev = 0.4;
  bool found = false;
  for (double d = 0.4; d >= -0.4; d -= 0.004) {
    if (min_dist(d) <= target) {
      best_d = d;
      found = true;
      break;
    }
    prev = d;
  }
  if (found) {
    double lo = best_d, hi = prev;
    for (int it = 0; it < 30; ++it) {
      const double mid = 0.5 * (lo + hi);
      (min_dist(mid) <= target ? lo : hi) = mid;
    }
    best_d = lo;
  } else {
    best_d = 0.0;
  }
  at.trans = base + best_d * dir;
  return at;
}

}  // namespace

double occlusion_factor(const InteractionScript& script, double t) {
  double h = 0;
  for (const auto& span : script.occlusions) {
    const double ramp =
        std::max(1e-9, std::min(span.ramp_s, 0.5 * (span.end_s - span.start_s)));
    double v = 0;
    if (t >= span.start_s && t <= span.end_s) {
      v = std::min(smoothstep((t - span.start_s) / ramp), smoothstep((span.end_s - t) / ramp));
    }
    h = std::max(h, v);
  }
  return h;
}

std::vector<MotionFrame> sample_motion(const InteractionScript& script, const BodyModel& model) {
  script.validate();
  const MotionParams p = derive_params(script);
  const TriMesh tmpl = object_template(script.template_id);
  const int frames = script.frame_count();
  std::vector<MotionFrame> out(frames);

  if (script.program == "linear_drift") {
    for (int i = 0; i < frames; ++i) {
      const double t = i / script.fps;
      out[i].body = body_at(script, p, t);
      out[i].object.rot = Rotation::exp(p.drift_axis * (p.drift_rate * t)) * p.drift_rot0;
      out[i].object.trans = p.drift_start + t * p.drift_vel;
      out[i].contact_part = 0;
    }
    return out;
  }

  const Attachment at = solve_attachment(script, model, p, tmpl);
  const int release_frame =
      script.program == "set_down" ? static_cast<int>(0.60 * frames) : frames;
  ObjectPose frozen;
  for (int i = 0; i < frames; ++i) {
    const double t = i / script.fps;
    out[i].body = body_at(script, p, t);
    if (i < release_frame) {
      const auto fk = model.forward(out[i].body);
      out[i].object.rot =
          Rotation::from_matrix_trusted(fk.r_global[at.joint]) * at.rot;
      out[i].object.trans = fk.r_global[at.joint] * at.trans + fk.joints[at.joint];
      out[i].contact_part = at.part;
      frozen = out[i].object;
    } else {
      out[i].object = frozen;
      out[i].contact_part = 0;
    }
  }
  return out;
}

Sequence generate_sequence(const InteractionScript& script, const BodyModel& model) {
  const auto motion = sample_motion(script, model);
  const int frames = static_cast<int>(motion.size());
  const TriMesh tmpl = object_template(script.template_id);

  Sequence seq;
  seq.fps = script.fps;
  seq.template_id = script.template_id;
  seq.program = script.program;
  seq.seed = script.seed;
  seq.camera = Camera{};

  seq.gt_body.resize(frames);
  seq.gt_object.resize(frames);
  seq.gt_vis.resize(frames);
  seq.unoccluded_object.resize(frames);
  seq.obs.resize(frames);

  // Contact spans from per-frame contact labels.
  int span_start = -1, span_part = 0;
  for (int i = 0; i <= frames; ++i) {
    const int part = i < frames ? motion[i].contact_part : 0;
    if (part != span_part) {
      if (span_part != 0) seq.contacts.push_back({span_start, i, span_part});
      span_start = i;
      span_part = part;
    }
  }

  parallel_for(frames, [&](std::ptrdiff_t i) {
    const double t = static_cast<double>(i) / script.fps;
    seq.gt_body[i] = motion[i].body;
    seq.gt_object[i] = motion[i].object;

    const TriMesh body_mesh = model.forward(motion[i].body).mesh;
    const TriMesh obj_mesh = tmpl.transformed(motion[i].object.rot, motion[i].object.trans);
    RenderMasks masks = render_masks(body_mesh, obj_mesh, seq.camera);

    // Scheduled occluder: hide a sweeping fraction of the visible object.
    const double h = occlusion_factor(script, t);
    if (h > 0 && masks.object.count() > 0) {
      int x0 = masks.object.width, x1 = -1;
      for (int y = 0; y < masks.object.height; ++y) {
        for (int x = 0; x < masks.object.width; ++x) {
          if (masks.object.at(y, x)) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
          }
        }
      }
      const double cut = x0 + h * (x1 - x0 + 1);
      for (int y = 0; y < masks.object.height; ++y) {
        for (int x = x0; x <= x1 && x < cut; ++x) masks.object.at(y, x) = 0;
      }
    }

    seq.gt_vis[i] = gt_visibility(masks.object, masks.object_unoccluded);
    seq.unoccluded_object[i] = std::move(masks.object_unoccluded);

    FrameObservation o;
    o.human_mask = std::move(masks.human);
    o.object_mask = std::move(masks.object);
    o.keypoints.resize(BodyModel::kJoints, 2);
    o.confidence = VecX::Ones(BodyModel::kJoints);
    const auto px = model.project_joints(motion[i].body, seq.camera);
    for (int jx = 0; jx < BodyModel::kJoints; ++jx) {
      o.keypoints(jx, 0) = px[jx].x();
      o.keypoints(jx, 1) = px[jx].y();
    }
    seq.obs[i] = std::move(o);
  });

  // Clean initial states: ground truth with origin-centered translation.
  seq.init_body.resize(frames);
  for (int i = 0; i < frames; ++i) {
    seq.init_body[i] = seq.gt_body[i];
    seq.init_body[i].translation = Vec3::Zero();
  }

  return perturb_observations(seq, script.noise, hash_combine(script.seed, 0x6e6f697365ull));
}

Sequence perturb_observations(const Sequence& clean, const NoiseConfig& cfg, uint64_t seed) {
  if (cfg.keypoint_sigma_px < 0) throw DegenerateInput("perturb: sigma must be >= 0");
  Sequence out = clean;
  Rng rng(seed);
  for (int i = 0; i < out.frames(); ++i) {
    auto& o = out.obs[i];
    for (int j = 0; j < o.keypoints.rows(); ++j) {
      o.keypoints(j, 0) += rng.gaussian(0, cfg.keypoint_sigma_px);
      o.keypoints(j, 1) += rng.gaussian(0, cfg.keypoint_sigma_px);
      o.confidence[j] = rng.uniform() < cfg.confidence_dropout ? 0.0 : 1.0;
    }
    if (!out.init_body.empty()) {
      auto& ib = out.init_body[i];
      for (int k = 0; k < ib.pose6d.size(); ++k) {
        ib.pose6d[k] += rng.gaussian(0, cfg.init_pose_sigma);
      }
      for (int k = 0; k < ib.beta.size(); ++k) {
        ib.beta[k] = std::clamp(ib.beta[k] + rng.gaussian(0, cfg.init_beta_sigma), -3.0, 3.0);
      }
    }
  }
  return out;
}

}  // namespace hoi
