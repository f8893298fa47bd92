#pragma once

#include "hoi/fit/smplt.hpp"
#include "hoi/hvop/net.hpp"
#include "hoi/sim/sequence.hpp"

namespace hoi {

// Ground-truth training windows: body rows are 147-wide (pose + translation
// rebased to the window's first frame), object rows are 6D rotations.
struct TrainDataset {
  std::vector<MatX> body;
  std::vector<MatX> obj;
};

TrainDataset build_windows(const std::vector<Sequence>& seqs, int window);

struct TrainConfig {
  int steps = 700;
  int batch = 16;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr_decay_at = 0.7;  // fraction of steps
  double lr_decay = 0.3;
  double clip_min_frac = 0.2, clip_max_frac = 0.6;  // zeroed-clip length
  double input_noise_6d = 0.015;  // augmentation on visible object rows
  uint64_t seed = 1;
  // Documented target for the toy benchmark; train_hvop reports it.
  double final_loss_threshold = 0.10;
};

struct TrainResult {
  std::vector<double> loss_curve;
  double final_loss = 0;  // mean over the last 20 steps
};

// Per step: sample a batch of windows, zero the object rows of a random
// clip (marking them occluded), supervise the full-window output with L1
// pose and L1 second-difference losses. Throws NonFiniteLoss.
TrainResult train_hvop(HvopNet& net, const TrainDataset& data, const TrainConfig& cfg);

}  // namespace hoi
