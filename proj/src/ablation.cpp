#include "hoi/eval/ablation.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "hoi/sim/simulate.hpp"

namespace hoi {

using json = nlohmann::json;

std::vector<AblationVariant> default_ablation_variants() {
  return {{"full", true, InfillMethod::kHvop, true},
          {"no_smplt_conditioning", false, InfillMethod::kHvop, true},
          {"no_hvop", true, InfillMethod::kNone, true},
          {"no_joint_opt", true, InfillMethod::kHvop, false}};
}

std::vector<InteractionScript> benchmark_scripts() {
  std::vector<InteractionScript> scripts;
  auto add = [&](const std::string& program, const std::string& tmpl, double dur, uint64_t seed,
                 std::vector<OcclusionSpan> occl) {
    InteractionScript s;
    s.program = program;
    s.template_id = tmpl;
    s.duration_s = dur;
    s.seed = seed;
    s.occlusions = std::move(occl);
    s.noise.keypoint_sigma_px = 2.0;
    s.noise.confidence_dropout = 0.05;
    s.noise.init_pose_sigma = 0.03;
    s.noise.init_beta_sigma = 0.2;
    scripts.push_back(std::move(s));
  };
  add("carry_box", "box", 12, 101, {{4.0, 6.5, 0.5}});
  add("carry_box", "box", 12, 102, {{3.0, 5.5, 0.5}, {8.0, 10.0, 0.4}});
  add("carry_box", "l_bracket", 10, 103, {{4.0, 6.0, 0.5}});
  add("carry_box", "box", 15, 104, {{5.0, 8.0, 0.6}});
  add("carry_box", "l_bracket", 10, 105, {{3.5, 6.0, 0.5}});
  add("carry_box", "box", 20, 106, {{6.0, 9.0, 0.5}, {13.0, 15.5, 0.5}});
  add("swing_rod", "rod", 10, 201, {{3.5, 6.0, 0.5}});
  add("swing_rod", "rod", 10, 202, {{4.0, 6.5, 0.5}});
  add("swing_rod", "rod", 12, 203, {{3.0, 5.5, 0.5}, {8.0, 10.0, 0.4}});
  add("swing_rod", "rod", 10, 204, {{4.5, 7.0, 0.5}});
  add("orbit_board", "board", 10, 301, {{3.5, 6.0, 0.5}});
  add("orbit_board", "board", 10, 302, {{4.0, 6.5, 0.5}});
  add("orbit_board", "board", 12, 303, {{5.0, 7.5, 0.5}});
  add("set_down", "box", 12, 401, {{2.0, 4.5, 0.5}});
  add("set_down", "box", 12, 402, {{2.5, 5.0, 0.5}});
  add("set_down", "l_bracket", 12, 403, {{2.0, 4.0, 0.5}});
  add("linear_drift", "box", 10, 501, {{3.5, 6.0, 0.5}});
  add("linear_drift", "rod", 10, 502, {{4.0, 6.5, 0.5}});
  add("linear_drift", "board", 10, 503, {{3.0, 5.5, 0.5}});
  add("linear_drift", "l_bracket", 10, 504, {{4.0, 7.0, 0.5}});
  return scripts;
}

AblationResult run_ablation(const AblationConfig& cfg, const BodyModel& model) {
  const auto variants = default_ablation_variants();
  AblationResult result;
  result.rows.resize(variants.size());
  for (size_t v = 0; v < variants.size(); ++v) result.rows[v].name = variants[v].name;
  result.reports.resize(variants.size() * cfg.scripts.size());

  std::vector<int> occluded_counts(variants.size(), 0);
  const std::string w1 = window_label(1.0 / 30.0, 30.0);
  const std::string w10 = window_label(10.0, 30.0);

  for (size_t sc = 0; sc < cfg.scripts.size(); ++sc) {
    const Sequence seq = generate_sequence(cfg.scripts[sc], model);

    // Stages shared across variants.
    PipelineOptions base = cfg.base;
    SmplTTrajectory traj = fit_smplt(seq, model, base.fit);
    if (base.smplt_smooth_window > 1 && traj.frames() >= base.smplt_smooth_window) {
      traj = smooth_trajectory(traj, base.smplt_smooth_window);
    }
    std::vector<FieldPtr> fields_on, fields_off;
    RawPrediction raw_on, raw_off;
    for (const auto& variant : variants) {
      if (variant.conditioning && fields_on.empty()) {
        fields_on = build_fields(seq, model, base.noise, true);
        raw_on = field_stage(seq, fields_on, traj, base.discovery);
      }
      if (!variant.conditioning && fields_off.empty()) {
        fields_off = build_fields(seq, model, base.noise, false);
        raw_off = field_stage(seq, fields_off, traj, base.discovery);
      }
    }

    for (size_t v = 0; v < variants.size(); ++v) {
      const auto& variant = variants[v];
      PipelineOptions opt = base;
      opt.conditioning = variant.conditioning;
      opt.infill = variant.infill;
      opt.joint = variant.joint;
      const auto& fields = variant.conditioning ? fields_on : fields_off;
      const auto& raw = variant.conditioning ? raw_on : raw_off;

      TrackState state = assemble_init_state(traj, raw, opt);
      if (variant.joint) {
        state = joint_optimize(seq, fields, state, model, opt.joint_cfg).state;
      }
      const std::string fp = config_fingerprint(opt.to_json() + variant.name);
      TrackReport report =
          evaluate(state, seq, model, cfg.windows_s, cfg.occlusion_bins, fp);

      AblationRow& row = result.rows[v];
      row.smpl_w1_cm += report.mean_chamfer_body_cm.at(w1);
      row.obj_w1_cm += report.mean_chamfer_object_cm.at(w1);
      row.smpl_w10_cm += report.mean_chamfer_body_cm.at(w10);
      row.obj_w10_cm += report.mean_chamfer_object_cm.at(w10);
      row.rot_deg += report.mean_rot_err_deg;
      row.trans_cm += report.mean_trans_err_cm;
      double occ_rot = 0;
      int occ_n = 0;
      for (int i = 0; i < report.frames; ++i) {
        if (report.gt_visibility[i] < 0.5) {
          occ_rot += report.rot_err_deg[i];
          ++occ_n;
        }
      }
      if (occ_n > 0) {
        row.occluded_rot_deg += occ_rot / occ_n;
        occluded_counts[v] += 1;
      }
      result.reports[v * cfg.scripts.size() + sc] = std::move(report);
    }
  }

  const double n = static_cast<double>(cfg.scripts.size());
  for (size_t v = 0; v < result.rows.size(); ++v) {
    AblationRow& row = result.rows[v];
    row.smpl_w1_cm /= n;
    row.obj_w1_cm /= n;
    row.smpl_w10_cm /= n;
    row.obj_w10_cm /= n;
    row.rot_deg /= n;
    row.trans_cm /= n;
    if (occluded_counts[v] > 0) row.occluded_rot_deg /= occluded_counts[v];
  }
  double best = std::numeric_limits<double>::max();
  for (size_t v = 1; v < result.rows.size(); ++v) best = std::min(best, result.rows[v].obj_w10_cm);
  result.full_best_on_object = result.rows[0].obj_w10_cm < best;
  return result;
}

std::string AblationResult::to_json() const {
  json j;
  j["schema"] = "hoi-ablation/1";
  json rows_j = json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"name", r.name},
                      {"smpl_w1_cm", r.smpl_w1_cm},
                      {"obj_w1_cm", r.obj_w1_cm},
                      {"smpl_w10_cm", r.smpl_w10_cm},
                      {"obj_w10_cm", r.obj_w10_cm},
                      {"rot_deg", r.rot_deg},
                      {"trans_cm", r.trans_cm},
                      {"occluded_rot_deg", r.occluded_rot_deg}});
  }
  j["rows"] = rows_j;
  j["full_best_on_object"] = full_best_on_object;
  return j.dump(1);
}

std::string AblationResult::to_text() const {
  std::ostringstream ss;
  ss << "variant                     SMPL w1   obj w1  SMPL w10  obj w10  rot(deg)  transl(cm)\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-26s %8.2f %8.2f %9.2f %8.2f %9.2f %11.2f\n",
                  r.name.c_str(), r.smpl_w1_cm, r.obj_w1_cm, r.smpl_w10_cm, r.obj_w10_cm,
                  r.rot_deg, r.trans_cm);
    ss << line;
  }
  ss << (full_best_on_object ? "full model best on object error (w10)\n"
                             : "WARNING: full model not best on object error (w10)\n");
  return ss.str();
}

}  // namespace hoi
