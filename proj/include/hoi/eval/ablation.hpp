#pragma once

#include "hoi/eval/pipeline.hpp"
#include "hoi/sim/script.hpp"

namespace hoi {

// Ablation switches mirroring the evaluation protocol: the full pipeline,
// field conditioning off, no infilling network, and no joint optimization.
struct AblationVariant {
  std::string name;
  bool conditioning = true;
  InfillMethod infill = InfillMethod::kHvop;
  bool joint = true;
};

std::vector<AblationVariant> default_ablation_variants();

struct AblationConfig {
  std::vector<InteractionScript> scripts;
  PipelineOptions base;
  std::vector<double> windows_s = {1.0 / 30.0, 10.0};
  int occlusion_bins = 10;
};

struct AblationRow {
  std::string name;
  double smpl_w1_cm = 0, obj_w1_cm = 0;
  double smpl_w10_cm = 0, obj_w10_cm = 0;
  double rot_deg = 0, trans_cm = 0;
  // Mean rotation error over occluded frames (gt visibility < 0.5).
  double occluded_rot_deg = 0;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // order of default_ablation_variants()
  // Direction asserted by the evaluation protocol: the full model is best
  // on object error at the long alignment window.
  bool full_best_on_object = false;
  std::vector<TrackReport> reports;  // rows x sequences, row-major
  std::string to_json() const;
  std::string to_text() const;
};

// Runs every variant over the scripts with shared per-sequence stages
// (generation, body fitting and per-conditioning field predictions are
// computed once). Deterministic given the script seeds.
AblationResult run_ablation(const AblationConfig& cfg, const BodyModel& model);

// The fixed benchmark suite: 20 sequences, mixed programs, >= 2 s
// occlusions, 30 fps.
std::vector<InteractionScript> benchmark_scripts();

}  // namespace hoi
