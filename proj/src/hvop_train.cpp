#include "hoi/hvop/train.hpp"

#include <cmath>

#include "hoi/parallel.hpp"

namespace hoi {

TrainDataset build_windows(const std::vector<Sequence>& seqs, int window) {
  TrainDataset data;
  for (const auto& seq : seqs) {
    const int t_count = seq.frames();
    if (t_count < window) continue;
    for (int start = 0; start + window <= t_count; start += window / 2) {
      MatX body(window, BodyModel::kThetaDim);
      MatX obj(window, 6);
      const Vec3 t0 = seq.gt_body[start].translation;
      for (int i = 0; i < window; ++i) {
        const auto& st = seq.gt_body[start + i];
        body.row(i).head(BodyModel::kJoints * 6) = st.pose6d.transpose();
        body.row(i).tail(3) = (st.translation - t0).transpose();
        obj.row(i) = seq.gt_object[start + i].rot.to_6d().transpose();
      }
      data.body.push_back(std::move(body));
      data.obj.push_back(std::move(obj));
    }
  }
  if (data.body.empty()) throw EmptyInput("build_windows: no windows (sequences too short?)");
  return data;
}

TrainResult train_hvop(HvopNet& net, const TrainDataset& data, const TrainConfig& cfg) {
  if (data.body.empty()) throw EmptyInput("train_hvop: empty dataset");
  const HvopConfig& nc = net.config();
  Rng rng(hash_combine(cfg.seed, 0x747261696eull));

  // Adam state per parameter.
  std::map<std::string, MatX> m1, m2;
  for (const auto& [name, p] : net.params().all()) {
    m1[name] = MatX::Zero(p.rows(), p.cols());
    m2[name] = MatX::Zero(p.rows(), p.cols());
  }

  TrainResult result;
  result.loss_curve.reserve(cfg.steps);

  struct Sample {
    const MatX* body;
    MatX obj;
    std::vector<uint8_t> mask;
    const MatX* target;
  };

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<Sample> batch(cfg.batch);
    for (int b = 0; b < cfg.batch; ++b) {
      const int wi = rng.uniform_int(0, static_cast<int>(data.body.size()) - 1);
      Sample s;
      s.body = &data.body[wi];
      s.target = &data.obj[wi];
      s.obj = data.obj[wi];
      const int t_len = static_cast<int>(s.obj.rows());
      s.mask.assign(t_len, 1);
      // Zero out the object pose for a random clip and mark it occluded.
      const int clip_len = std::max(
          1, static_cast<int>(rng.uniform(cfg.clip_min_frac, cfg.clip_max_frac) * t_len));
      const int clip_start = rng.uniform_int(0, t_len - clip_len);
      for (int i = clip_start; i < clip_start + clip_len; ++i) {
        s.obj.row(i).setZero();
        s.mask[i] = 0;
      }
      if (cfg.input_noise_6d > 0) {
        for (int i = 0; i < t_len; ++i) {
          if (!s.mask[i]) continue;
          for (int c = 0; c < s.obj.cols(); ++c) {
            s.obj(i, c) += rng.gaussian(0, cfg.input_noise_6d);
          }
        }
      }
      batch[b] = std::move(s);
    }

    // Per-window losses and gradients, reduced in fixed batch order.
    std::vector<double> losses(cfg.batch);
    std::vector<std::map<std::string, MatX>> grads(cfg.batch);
    parallel_for(cfg.batch, [&](std::ptrdiff_t b) {
      losses[b] = net.loss_and_grad(*batch[b].body, batch[b].obj, batch[b].mask,
                                    *batch[b].target, &grads[b]);
    });

    double loss = 0;
    std::map<std::string, MatX> grad;
    for (int b = 0; b < cfg.batch; ++b) {
      loss += losses[b];
      for (auto& [name, g] : grads[b]) {
        auto it = grad.find(name);
        if (it == grad.end()) {
          grad[name] = g;
        } else {
          it->second += g;
        }
      }
    }
    loss /= cfg.batch;
    if (!std::isfinite(loss)) {
      throw NonFiniteLoss("train_hvop: non-finite loss at step " + std::to_string(step));
    }
    result.loss_curve.push_back(loss);

    const double lr =
        step >= cfg.lr_decay_at * cfg.steps ? cfg.lr * cfg.lr_decay : cfg.lr;
    const double bc1 = 1 - std::pow(cfg.beta1, step + 1);
    const double bc2 = 1 - std::pow(cfg.beta2, step + 1);
    for (auto& [name, p] : net.params().all()) {
      auto it = grad.find(name);
      if (it == grad.end()) continue;
      const MatX g = it->second / cfg.batch;
      m1[name] = cfg.beta1 * m1[name] + (1 - cfg.beta1) * g;
      m2[name] = cfg.beta2 * m2[name] + (1 - cfg.beta2) * g.cwiseProduct(g);
      const MatX mh = m1[name] / bc1;
      const MatX vh = m2[name] / bc2;
      p.array() -= lr * mh.array() / (vh.array().sqrt() + cfg.eps);
    }
    (void)nc;
  }

  const int tail = std::min<int>(20, static_cast<int>(result.loss_curve.size()));
  double acc = 0;
  for (int i = 0; i < tail; ++i) acc += result.loss_curve[result.loss_curve.size() - 1 - i];
  result.final_loss = acc / tail;
  return result;
}

}  // namespace hoi
