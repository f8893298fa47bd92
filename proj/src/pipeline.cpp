#include "hoi/eval/pipeline.hpp"

#include <nlohmann/json.hpp>

#include "hoi/parallel.hpp"

namespace hoi {

using json = nlohmann::json;

InfillMethod infill_method_from_string(const std::string& s) {
  if (s == "hvop") return InfillMethod::kHvop;
  if (s == "slerp") return InfillMethod::kSlerp;
  if (s == "none") return InfillMethod::kNone;
  throw DegenerateInput("unknown infill method: " + s);
}

std::string to_string(InfillMethod m) {
  switch (m) {
    case InfillMethod::kHvop: return "hvop";
    case InfillMethod::kSlerp: return "slerp";
    case InfillMethod::kNone: return "none";
  }
  return "?";
}

std::string PipelineOptions::to_json() const {
  json j;
  j["pipeline"] = {{"conditioning", conditioning},
                   {"infill", hoi::to_string(infill)},
                   {"joint", joint},
                   {"smooth_rotations", smooth_rotations},
                   {"rotation_smooth_window", rotation_smooth_window},
                   {"smplt_smooth_window", smplt_smooth_window}};
  j["fit"] = json::parse(fit.to_json());
  j["field_noise"] = json::parse(noise.to_json());
  j["joint"] = json::parse(joint_cfg.to_json());
  j["discovery"] = {{"seed_count", discovery.seed_count},
                    {"box_half", discovery.box_half},
                    {"steps", discovery.steps},
                    {"keep_threshold", discovery.keep_threshold},
                    {"fd_step", discovery.fd_step},
                    {"analytic_gradient", discovery.analytic_gradient}};
  return j.dump(1);
}

PipelineOptions PipelineOptions::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("pipeline config: invalid JSON");
  PipelineOptions opt;
  if (j.contains("pipeline")) {
    const auto& p = j["pipeline"];
    opt.conditioning = p.value("conditioning", opt.conditioning);
    if (p.contains("infill")) opt.infill = infill_method_from_string(p["infill"].get<std::string>());
    opt.joint = p.value("joint", opt.joint);
    opt.smooth_rotations = p.value("smooth_rotations", opt.smooth_rotations);
    opt.rotation_smooth_window = p.value("rotation_smooth_window", opt.rotation_smooth_window);
    opt.smplt_smooth_window = p.value("smplt_smooth_window", opt.smplt_smooth_window);
  }
  if (j.contains("fit")) opt.fit = FitConfig::from_json(j["fit"].dump());
  if (j.contains("field_noise")) opt.noise = FieldNoiseConfig::from_json(j["field_noise"].dump());
  if (j.contains("joint")) opt.joint_cfg = JointConfig::from_json(j["joint"].dump());
  if (j.contains("discovery")) {
    const auto& d = j["discovery"];
    opt.discovery.seed_count = d.value("seed_count", opt.discovery.seed_count);
    opt.discovery.box_half = d.value("box_half", opt.discovery.box_half);
    opt.discovery.steps = d.value("steps", opt.discovery.steps);
    opt.discovery.keep_threshold = d.value("keep_threshold", opt.discovery.keep_threshold);
    opt.discovery.fd_step = d.value("fd_step", opt.discovery.fd_step);
    opt.discovery.analytic_gradient = d.value("analytic_gradient", opt.discovery.analytic_gradient);
  }
  return opt;
}

RawPrediction field_stage(const Sequence& seq, const std::vector<FieldPtr>& fields,
                          const SmplTTrajectory& traj, const DiscoveryConfig& discovery) {
  const int t_count = seq.frames();
  RawPrediction raw;
  raw.poses.resize(t_count);
  raw.vis.resize(t_count);
  // Sequential: each frame's seed box follows the previous estimate.
  Vec3 seed_center = traj.translation.empty() ? Vec3(0, 0, 3) : traj.translation[0];
  for (int i = 0; i < t_count; ++i) {
    DiscoveryConfig cfg = discovery;
    cfg.seed = hash_combine(hash_combine(seq.seed, 0x646973636full), static_cast<uint64_t>(i));
    if (i == 0) seed_center = traj.translation[0];
    const FramePrediction pred = predict_frame(*fields[i], seed_center, cfg);
    raw.poses[i] = pred.pose;
    raw.vis[i] = pred.vis;
    seed_center = pred.pose.trans;
  }
  return raw;
}

TrackState assemble_init_state(const SmplTTrajectory& traj, const RawPrediction& raw,
                               const PipelineOptions& opt) {
  const int t_count = traj.frames();
  if (static_cast<int>(raw.poses.size()) != t_count) {
    throw LengthMismatch("assemble_init_state: prediction length mismatch");
  }
  TrackState state;
  state.beta = traj.beta;
  state.visibility = raw.vis;
  for (int i = 0; i < t_count; ++i) {
    BodyState b;
    b.pose6d = traj.pose6d[i];
    b.translation = traj.translation[i];
    b.beta = traj.beta;
    state.body.push_back(std::move(b));
  }

  std::vector<Rotation> rots(t_count);
  for (int i = 0; i < t_count; ++i) rots[i] = raw.poses[i].rot;
  if (opt.smooth_rotations && t_count >= opt.rotation_smooth_window) {
    rots = smooth_object_rotations(rots, opt.rotation_smooth_window);
  }

  const double delta = opt.hvop ? opt.hvop->config().delta : 0.5;
  std::vector<uint8_t> visible(t_count);
  for (int i = 0; i < t_count; ++i) visible[i] = raw.vis[i] >= delta ? 1 : 0;

  switch (opt.infill) {
    case InfillMethod::kNone:
      break;
    case InfillMethod::kSlerp:
      rots = slerp_infill(rots, visible);
      break;
    case InfillMethod::kHvop: {
      if (!opt.hvop) throw MissingInitialization("pipeline: hvop infill requires a checkpoint");
      std::vector<VecX> theta(t_count);
      for (int i = 0; i < t_count; ++i) theta[i] = traj.theta(i);
      rots = infill_sequence(*opt.hvop, theta, rots, raw.vis);
      break;
    }
  }
  state.obj_rot = rots;

  // Occluded-frame translations: linear interpolation between flanking
  // visible frames (holds at the ends). The object translation of occluded
  // frames is then refined by smoothness and contact during joint
  // optimization.
  state.obj_trans.resize(t_count);
  std::vector<int> vis_idx;
  for (int i = 0; i < t_count; ++i) {
    if (visible[i]) vis_idx.push_back(i);
  }
  for (int i = 0; i < t_count; ++i) {
    if (visible[i] || vis_idx.empty()) {
      state.obj_trans[i] = raw.poses[i].trans;
      continue;
    }
    const auto next = std::lower_bound(vis_idx.begin(), vis_idx.end(), i);
    if (next == vis_idx.begin()) {
      state.obj_trans[i] = raw.poses[vis_idx.front()].trans;
    } else if (next == vis_idx.end()) {
      state.obj_trans[i] = raw.poses[vis_idx.back()].trans;
    } else {
      const int i1 = *next, i0 = *(next - 1);
      const double t = static_cast<double>(i - i0) / (i1 - i0);
      state.obj_trans[i] =
          (1 - t) * raw.poses[i0].trans + t * raw.poses[i1].trans;
    }
  }
  return state;
}

PipelineOutputs run_pipeline(const Sequence& seq, const BodyModel& model,
                             const PipelineOptions& opt) {
  PipelineOutputs out;
  out.traj = fit_smplt(seq, model, opt.fit, &out.fit_result);
  if (opt.smplt_smooth_window > 1 && out.traj.frames() >= opt.smplt_smooth_window) {
    out.traj = smooth_trajectory(out.traj, opt.smplt_smooth_window);
  }
  const auto fields = build_fields(seq, model, opt.noise, opt.conditioning);
  out.raw = field_stage(seq, fields, out.traj, opt.discovery);
  out.init_state = assemble_init_state(out.traj, out.raw, opt);
  if (opt.joint) {
    const JointResult jr = joint_optimize(seq, fields, out.init_state, model, opt.joint_cfg);
    out.final_state = jr.state;
    out.stage1 = jr.stage1;
    out.stage2 = jr.stage2;
  } else {
    out.final_state = out.init_state;
  }
  return out;
}

}  // namespace hoi
