#include "hoi/eval/metrics.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "hoi/geom/windowed_error.hpp"
#include "hoi/sim/objects.hpp"

namespace hoi {

using json = nlohmann::json;

std::vector<OcclusionBin> occlusion_binned(const std::vector<double>& rot_err_deg,
                                           const std::vector<double>& trans_err_cm,
                                           const std::vector<double>& visibility, int bins) {
  if (rot_err_deg.size() != visibility.size() || trans_err_cm.size() != visibility.size()) {
    throw LengthMismatch("occlusion_binned: input lengths differ");
  }
  if (bins < 1) throw DegenerateInput("occlusion_binned: need >= 1 bin");
  std::vector<OcclusionBin> out(bins);
  for (int b = 0; b < bins; ++b) out[b].center = (b + 0.5) / bins;
  for (size_t i = 0; i < visibility.size(); ++i) {
    const double occ = std::clamp(1.0 - visibility[i], 0.0, 1.0);
    const int b = std::min(bins - 1, static_cast<int>(occ * bins));
    out[b].count += 1;
    out[b].mean_rot_deg += rot_err_deg[i];
    out[b].mean_trans_cm += trans_err_cm[i];
  }
  for (auto& bin : out) {
    if (bin.count > 0) {
      bin.mean_rot_deg /= bin.count;
      bin.mean_trans_cm /= bin.count;
    } else {
      bin.mean_rot_deg = bin.mean_trans_cm = 0;
    }
  }
  return out;
}

std::string window_label(double window_s, double fps) {
  const int frames = std::max(1, static_cast<int>(std::lround(window_s * fps)));
  if (frames == 1) return "w1";
  std::ostringstream ss;
  ss << "w" << window_s << "s";
  return ss.str();
}

TrackReport evaluate(const TrackState& pred, const Sequence& gt, const BodyModel& model,
                     const std::vector<double>& windows_s, int occlusion_bins_n,
                     const std::string& fingerprint, int body_stride, int object_stride) {
  if (pred.frames() != gt.frames()) throw LengthMismatch("evaluate: frame counts differ");
  if (windows_s.empty()) throw DegenerateInput("evaluate: no alignment windows");
  const int t_count = gt.frames();
  const TriMesh tmpl = object_template(gt.template_id);
  const auto body_sub = stride_indices(model.vertex_count(), body_stride);
  const auto obj_sub = stride_indices(tmpl.vertex_count(), object_stride);

  MeshTrack pred_track, gt_track;
  for (int i = 0; i < t_count; ++i) {
    pred_track.body.push_back(model.forward(pred.body_state(i), body_sub).mesh.vertices);
    BodyState gt_state = gt.gt_body[i];
    gt_track.body.push_back(model.forward(gt_state, body_sub).mesh.vertices);
    if (pred.has_object) {
      std::vector<Vec3> pv(obj_sub.size()), gv(obj_sub.size());
      for (size_t k = 0; k < obj_sub.size(); ++k) {
        pv[k] = pred.obj_rot[i] * tmpl.vertices[obj_sub[k]] + pred.obj_trans[i];
        gv[k] = gt.gt_object[i].rot * tmpl.vertices[obj_sub[k]] + gt.gt_object[i].trans;
      }
      pred_track.object.push_back(std::move(pv));
      gt_track.object.push_back(std::move(gv));
    }
  }

  TrackReport report;
  report.fps = gt.fps;
  report.frames = t_count;
  report.config_fingerprint = fingerprint;
  report.seeds = {gt.seed};
  report.gt_visibility = gt.gt_vis;

  for (double w : windows_s) {
    const auto err = windowed_procrustes_error(pred_track, gt_track, w, gt.fps);
    const std::string label = window_label(w, gt.fps);
    std::vector<double> body_cm(t_count), obj_cm;
    for (int i = 0; i < t_count; ++i) body_cm[i] = err.body[i] * 100.0;
    if (pred.has_object) {
      obj_cm.resize(t_count);
      for (int i = 0; i < t_count; ++i) obj_cm[i] = err.object[i] * 100.0;
    }
    report.chamfer_body_cm[label] = std::move(body_cm);
    if (pred.has_object) report.chamfer_object_cm[label] = std::move(obj_cm);
  }

  if (pred.has_object) {
    report.rot_err_deg.resize(t_count);
    report.trans_err_cm.resize(t_count);
    for (int i = 0; i < t_count; ++i) {
      report.rot_err_deg[i] = rotation_angle_error_deg(pred.obj_rot[i], gt.gt_object[i].rot);
      report.trans_err_cm[i] = (pred.obj_trans[i] - gt.gt_object[i].trans).norm() * 100.0;
    }
    report.bins = occlusion_binned(report.rot_err_deg, report.trans_err_cm, gt.gt_vis,
                                   occlusion_bins_n);
  }

  auto mean = [](const std::vector<double>& v) {
    double acc = 0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / v.size();
  };
  for (const auto& [label, v] : report.chamfer_body_cm) report.mean_chamfer_body_cm[label] = mean(v);
  for (const auto& [label, v] : report.chamfer_object_cm) {
    report.mean_chamfer_object_cm[label] = mean(v);
  }
  report.mean_rot_err_deg = mean(report.rot_err_deg);
  report.mean_trans_err_cm = mean(report.trans_err_cm);
  return report;
}

std::string TrackReport::to_json() const {
  json j;
  j["schema"] = "hoi-track-report/1";
  j["fps"] = fps;
  j["frames"] = frames;
  j["config_fingerprint"] = config_fingerprint;
  j["seeds"] = seeds;
  j["chamfer_body_cm"] = chamfer_body_cm;
  j["chamfer_object_cm"] = chamfer_object_cm;
  j["rot_err_deg"] = rot_err_deg;
  j["trans_err_cm"] = trans_err_cm;
  j["gt_visibility"] = gt_visibility;
  json bins_j = json::array();
  for (const auto& b : bins) {
    json e;
    e["center"] = b.center;
    e["count"] = b.count;
    if (b.count > 0) {
      e["mean_rot_deg"] = b.mean_rot_deg;
      e["mean_trans_cm"] = b.mean_trans_cm;
    } else {
      e["mean_rot_deg"] = nullptr;
      e["mean_trans_cm"] = nullptr;
    }
    bins_j.push_back(e);
  }
  j["occlusion_bins"] = bins_j;
  j["mean_chamfer_body_cm"] = mean_chamfer_body_cm;
  j["mean_chamfer_object_cm"] = mean_chamfer_object_cm;
  j["mean_rot_err_deg"] = mean_rot_err_deg;
  j["mean_trans_err_cm"] = mean_trans_err_cm;
  return j.dump(1);
}

TrackReport TrackReport::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("track report: invalid JSON");
  if (j.value("schema", "") != "hoi-track-report/1") {
    throw VersionMismatch("track report: unsupported schema");
  }
  TrackReport r;
  r.fps = j.at("fps").get<double>();
  r.frames = j.at("frames").get<int>();
  r.config_fingerprint = j.value("config_fingerprint", "");
  r.seeds = j.value("seeds", std::vector<uint64_t>{});
  r.chamfer_body_cm = j.at("chamfer_body_cm").get<std::map<std::string, std::vector<double>>>();
  r.chamfer_object_cm =
      j.at("chamfer_object_cm").get<std::map<std::string, std::vector<double>>>();
  r.rot_err_deg = j.at("rot_err_deg").get<std::vector<double>>();
  r.trans_err_cm = j.at("trans_err_cm").get<std::vector<double>>();
  r.gt_visibility = j.at("gt_visibility").get<std::vector<double>>();
  for (const auto& e : j.at("occlusion_bins")) {
    OcclusionBin b;
    b.center = e.at("center").get<double>();
    b.count = e.at("count").get<int>();
    if (b.count > 0) {
      b.mean_rot_deg = e.at("mean_rot_deg").get<double>();
      b.mean_trans_cm = e.at("mean_trans_cm").get<double>();
    }
    r.bins.push_back(b);
  }
  r.mean_chamfer_body_cm = j.at("mean_chamfer_body_cm").get<std::map<std::string, double>>();
  r.mean_chamfer_object_cm = j.at("mean_chamfer_object_cm").get<std::map<std::string, double>>();
  r.mean_rot_err_deg = j.at("mean_rot_err_deg").get<double>();
  r.mean_trans_err_cm = j.at("mean_trans_err_cm").get<double>();
  return r;
}

std::string TrackReport::frames_csv() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "frame,gt_visibility,rot_err_deg,trans_err_cm";
  for (const auto& [label, v] : chamfer_body_cm) ss << ",body_" << label << "_cm";
  for (const auto& [label, v] : chamfer_object_cm) ss << ",object_" << label << "_cm";
  ss << "\n";
  for (int i = 0; i < frames; ++i) {
    ss << i << "," << gt_visibility[i];
    ss << "," << (rot_err_deg.empty() ? 0.0 : rot_err_deg[i]);
    ss << "," << (trans_err_cm.empty() ? 0.0 : trans_err_cm[i]);
    for (const auto& [label, v] : chamfer_body_cm) ss << "," << v[i];
    for (const auto& [label, v] : chamfer_object_cm) ss << "," << v[i];
    ss << "\n";
  }
  return ss.str();
}

std::string TrackReport::bins_csv() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "bin_center_occlusion,count,mean_rot_deg,mean_trans_cm\n";
  for (const auto& b : bins) {
    ss << b.center << "," << b.count << ",";
    if (b.count > 0) {
      ss << b.mean_rot_deg << "," << b.mean_trans_cm;
    } else {
      ss << ",";
    }
    ss << "\n";
  }
  return ss.str();
}

std::string config_fingerprint(const std::string& canonical_json) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_json) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

}  // namespace hoi
