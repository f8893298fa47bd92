#pragma once

#include <map>

#include "hoi/opt/joint.hpp"
#include "hoi/sim/sequence.hpp"

namespace hoi {

// Occlusion-binned error curve entry; count == 0 marks an empty bin (its
// means are meaningless and serialized as null).
struct OcclusionBin {
  double center = 0;  // bin center on the 1 - visibility axis
  int count = 0;
  double mean_rot_deg = 0;
  double mean_trans_cm = 0;
};

std::vector<OcclusionBin> occlusion_binned(const std::vector<double>& rot_err_deg,
                                           const std::vector<double>& trans_err_cm,
                                           const std::vector<double>& visibility, int bins);

// Per-sequence evaluation report. Aggregates are means of the persisted
// per-frame values; everything is recomputable from the per-frame data.
struct TrackReport {
  double fps = 30;
  int frames = 0;
  std::string config_fingerprint;
  std::vector<uint64_t> seeds;
  // Window label ("w1" for per-frame, "w<seconds>s" otherwise) -> per-frame
  // Chamfer distances in cm.
  std::map<std::string, std::vector<double>> chamfer_body_cm;
  std::map<std::string, std::vector<double>> chamfer_object_cm;
  std::vector<double> rot_err_deg;
  std::vector<double> trans_err_cm;
  std::vector<double> gt_visibility;
  std::vector<OcclusionBin> bins;

  std::map<std::string, double> mean_chamfer_body_cm;
  std::map<std::string, double> mean_chamfer_object_cm;
  double mean_rot_err_deg = 0;
  double mean_trans_err_cm = 0;

  std::string to_json() const;
  static TrackReport from_json(const std::string& text);
  std::string frames_csv() const;
  std::string bins_csv() const;
};

std::string window_label(double window_s, double fps);

// Sliding-window joint Procrustes evaluation of a tracked state against the
// ground truth. windows_s are alignment windows in seconds; a value whose
// frame count rounds to 1 reproduces per-frame alignment. Object rotation /
// translation errors are raw (unaligned), reported in degrees / cm.
TrackReport evaluate(const TrackState& pred, const Sequence& gt, const BodyModel& model,
                     const std::vector<double>& windows_s, int occlusion_bins = 10,
                     const std::string& fingerprint = "", int body_stride = 2,
                     int object_stride = 1);

// FNV-1a over the canonical config serialization.
std::string config_fingerprint(const std::string& canonical_json);

}  // namespace hoi
