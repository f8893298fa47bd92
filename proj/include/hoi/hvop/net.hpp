#pragma once

#include <map>
#include <string>

#include "hoi/hvop/tensor.hpp"

namespace hoi {

struct HvopConfig {
  int window = 32;       // training window length (frames)
  int body_dim = 147;    // 24 x 6 pose + translation
  int obj_dim = 6;       // object rotation, 6D
  int d_hs = 128;        // body path hidden size
  int d_ho = 32;         // object path hidden size
  int heads_s = 4, heads_o = 2, heads_comb = 1;
  int layers_s = 2, layers_o = 2, layers_comb = 4;
  int out_hidden = 32;
  int ffn_mult = 2;
  double leaky_slope = 0.01;
  double lambda_pose = 1.0;
  double lambda_accel = 0.1;
  double delta = 0.5;  // visibility threshold for "occluded"

  void validate() const;
  std::string to_json() const;
  static HvopConfig from_json(const std::string& text);
};

// Named parameter arrays; deterministic iteration order.
class ParamStore {
 public:
  MatX& at(const std::string& name);
  const MatX& at(const std::string& name) const;
  MatX& create(const std::string& name, int rows, int cols);
  const std::map<std::string, MatX>& all() const { return params_; }
  std::map<std::string, MatX>& all() { return params_; }
  size_t scalar_count() const;

  // Flat binary checkpoint: header + named arrays.
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  std::map<std::string, MatX> params_;
};

// Attention sublayer parameters (pre-norm residual block).
struct AttnBlockRefs {
  DT ln_g, ln_b, wq, bq, wk, bk, wv, bv, wo, bo;
};
struct FfnBlockRefs {
  DT ln_g, ln_b, w1, b1, w2, b2;
};

// Pre-norm residual multi-head self-attention. Masked keys receive -inf
// logits; when the mask excludes every key the attention output is zero for
// all queries and *all_masked is set.
DT mhsa_block(Tape& tape, DT x, const AttnBlockRefs& p, int heads,
              const std::vector<uint8_t>& key_mask, bool* all_masked);

// Pre-norm residual feed-forward block with GeLU.
DT ffn_block(Tape& tape, DT x, const FfnBlockRefs& p);

MatX sinusoidal_positional_encoding(int length, int dim);

// Masked-attention object pose infilling network: a body-pose transformer
// attending to all frames, an object transformer attending to visible
// frames only, and a joint transformer over the concatenated features.
class HvopNet {
 public:
  HvopNet(const HvopConfig& cfg, uint64_t init_seed);
  HvopNet(const HvopConfig& cfg, ParamStore params);

  const HvopConfig& config() const { return cfg_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  // body: T x 147 (translations window-rebased), obj: T x 6 with occluded
  // rows zeroed, vis_mask: per-frame key admissibility for the object
  // transformer. Returns T x 6.
  MatX forward(const MatX& body, const MatX& obj, const std::vector<uint8_t>& vis_mask,
               bool* all_masked = nullptr) const;

  // Training loss: lambda_pose * L1(pred, target) +
  // lambda_accel * L1(second_diff(pred), second_diff(target)).
  // Accumulates d(loss)/d(param) into `grads` when non-null.
  double loss_and_grad(const MatX& body, const MatX& obj, const std::vector<uint8_t>& vis_mask,
                       const MatX& target, std::map<std::string, MatX>* grads) const;

  void save(const std::string& path) const;
  static HvopNet load(const std::string& path);

 private:
  struct Graph;
  DT build(Tape& tape, const MatX& body, const MatX& obj, const std::vector<uint8_t>& vis_mask,
           std::map<std::string, DT>* leaves, bool* all_masked) const;

  HvopConfig cfg_;
  ParamStore params_;
};

}  // namespace hoi
