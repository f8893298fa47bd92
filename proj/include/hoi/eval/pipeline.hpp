#pragma once

#include "hoi/eval/metrics.hpp"
#include "hoi/field/discovery.hpp"
#include "hoi/fit/smplt.hpp"
#include "hoi/hvop/infill.hpp"
#include "hoi/opt/joint.hpp"

namespace hoi {

enum class InfillMethod { kHvop, kSlerp, kNone };

InfillMethod infill_method_from_string(const std::string& s);
std::string to_string(InfillMethod m);

struct PipelineOptions {
  bool conditioning = true;  // SMPL-T conditioning of the field oracle
  InfillMethod infill = InfillMethod::kHvop;
  bool joint = true;
  bool smooth_rotations = true;
  int rotation_smooth_window = 5;
  int smplt_smooth_window = 5;
  FitConfig fit;
  FieldNoiseConfig noise;
  JointConfig joint_cfg;
  DiscoveryConfig discovery;
  const HvopNet* hvop = nullptr;  // required for InfillMethod::kHvop

  // Effective configuration as canonical JSON (for fingerprints).
  std::string to_json() const;
  // Loads the per-module sections {fit, field_noise, joint, discovery,
  // pipeline} from one declarative file; missing sections keep defaults.
  static PipelineOptions from_json(const std::string& text);
};

// Raw per-frame field predictions.
struct RawPrediction {
  std::vector<ObjectPose> poses;
  std::vector<double> vis;
};

RawPrediction field_stage(const Sequence& seq, const std::vector<FieldPtr>& fields,
                          const SmplTTrajectory& traj, const DiscoveryConfig& discovery);

// Smoothing, rotation infilling and occluded-frame translation
// interpolation; produces the joint-optimization initialization.
TrackState assemble_init_state(const SmplTTrajectory& traj, const RawPrediction& raw,
                               const PipelineOptions& opt);

struct PipelineOutputs {
  SmplTTrajectory traj;
  RawPrediction raw;
  TrackState init_state;
  TrackState final_state;
  OptResult fit_result;
  OptResult stage1, stage2;
};

PipelineOutputs run_pipeline(const Sequence& seq, const BodyModel& model,
                             const PipelineOptions& opt);

}  // namespace hoi
