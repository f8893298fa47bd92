#include "hoi/hvop/infill.hpp"

#include <algorithm>

#include "hoi/body/body_model.hpp"

namespace hoi {

std::vector<Rotation> slerp_infill(const std::vector<Rotation>& rots,
                                   const std::vector<uint8_t>& visible) {
  const int t_count = static_cast<int>(rots.size());
  if (static_cast<int>(visible.size()) != t_count) {
    throw LengthMismatch("slerp_infill: mask length mismatch");
  }
  std::vector<int> vis_idx;
  for (int i = 0; i < t_count; ++i) {
    if (visible[i]) vis_idx.push_back(i);
  }
  if (vis_idx.empty()) throw NoVisibleFrames("slerp_infill: no visible frames");

  std::vector<Rotation> out = rots;
  for (int i = 0; i < t_count; ++i) {
    if (visible[i]) continue;
    const auto next = std::lower_bound(vis_idx.begin(), vis_idx.end(), i);
    if (next == vis_idx.begin()) {
      out[i] = rots[vis_idx.front()];  // leading gap
    } else if (next == vis_idx.end()) {
      out[i] = rots[vis_idx.back()];  // trailing gap
    } else {
      const int i1 = *next;
      const int i0 = *(next - 1);
      const double t = static_cast<double>(i - i0) / static_cast<double>(i1 - i0);
      out[i] = slerp(rots[i0], rots[i1], t);
    }
  }
  return out;
}

std::vector<Rotation> smooth_object_rotations(const std::vector<Rotation>& rots, int window) {
  const int t_count = static_cast<int>(rots.size());
  if (window < 1 || window > t_count) {
    throw DegenerateInput("smooth_object_rotations: window must be in [1, length]");
  }
  if (window % 2 == 0) throw DegenerateInput("smooth_object_rotations: window must be odd");
  if (window == 1) return rots;
  const int h = window / 2;
  std::vector<Rotation> out(t_count);
  for (int i = 0; i < t_count; ++i) {
    Mat3 acc = Mat3::Zero();
    int n = 0;
    for (int k = -h; k <= h; ++k) {
      const int s = std::clamp(i + k, 0, t_count - 1);
      acc += rots[s].matrix();
      ++n;
    }
    out[i] = symmetric_orthogonalize(acc / n);
  }
  return out;
}

std::vector<Rotation> infill_sequence(const HvopNet& net, const std::vector<VecX>& body_theta,
                                      const std::vector<Rotation>& rots,
                                      const std::vector<double>& visibility) {
  const int t_count = static_cast<int>(rots.size());
  if (static_cast<int>(body_theta.size()) != t_count ||
      static_cast<int>(visibility.size()) != t_count) {
    throw LengthMismatch("infill_sequence: input lengths differ");
  }
  if (t_count == 0) throw EmptyInput("infill_sequence: empty sequence");
  const HvopConfig& cfg = net.config();
  const double delta = cfg.delta;

  std::vector<uint8_t> context(t_count);  // visible or already predicted
  for (int i = 0; i < t_count; ++i) context[i] = visibility[i] >= delta ? 1 : 0;

  std::vector<Rotation> out = rots;
  std::vector<uint8_t> predicted(t_count, 0);

  const int w = std::min(cfg.window, t_count);
  const int stride = std::max(1, w / 2);
  std::vector<int> starts;
  for (int s = 0;; s += stride) {
    if (s + w >= t_count) {
      starts.push_back(std::max(0, t_count - w));
      break;
    }
    starts.push_back(s);
  }

  for (int start : starts) {
    bool any_context = false;
    for (int i = 0; i < w; ++i) any_context = any_context || context[start + i];
    if (!any_context) {
      throw NoVisibleContext("infill_sequence: window without visible frames or context");
    }
    MatX body(w, BodyModel::kThetaDim);
    MatX obj = MatX::Zero(w, 6);
    std::vector<uint8_t> mask(w, 0);
    const Vec3 t0 = body_theta[start].tail(3);
    for (int i = 0; i < w; ++i) {
      body.row(i).head(BodyModel::kJoints * 6) =
          body_theta[start + i].head(BodyModel::kJoints * 6).transpose();
      body.row(i).tail(3) = (body_theta[start + i].tail(3) - t0).transpose();
      if (context[start + i]) {
        obj.row(i) = out[start + i].to_6d().transpose();
        mask[i] = 1;
      }
    }
    const MatX pred = net.forward(body, obj, mask);
    for (int i = 0; i < w; ++i) {
      const int frame = start + i;
      if (context[frame] || predicted[frame]) continue;
      out[frame] = rot6d_to_matrix(pred.row(i).transpose());
      predicted[frame] = 1;
    }
    // Predictions become context for later windows.
    for (int i = 0; i < w; ++i) context[start + i] = 1;
  }
  return out;
}

}  // namespace hoi
