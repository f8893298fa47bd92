#pragma once

#include <functional>
#include <vector>

#include "hoi/common.hpp"

namespace hoi {

class Tape;

// Handle to a tape node: a matrix value with a gradient accumulator.
class DT {
 public:
  DT() = default;
  const MatX& value() const;
  const MatX& grad() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  DT(Tape* tape, int idx) : tape_(tape), idx_(idx) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

// Reverse-mode tape over dense matrices. Every forward op records a
// backward rule; backward() propagates from a scalar loss node. Gradient
// rules are validated against finite differences in the test suite.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  DT input(MatX value);

  DT add(DT a, DT b);
  DT sub(DT a, DT b);
  DT scale(DT a, double s);
  DT add_const(DT a, const MatX& c);  // no gradient into c
  DT matmul(DT a, DT b);
  DT hadamard(DT a, DT b);
  DT transpose(DT a);
  // Broadcasts a 1 x C row over all rows of a (bias add).
  DT add_rowvec(DT a, DT row);
  // Broadcast multiply by a 1 x C row (layer-norm gain).
  DT mul_rowvec(DT a, DT row);
  DT concat_cols(DT a, DT b);
  DT slice_cols(DT a, int begin, int n);

  DT softmax_rows(DT a);
  // Masked softmax: key_mask marks admissible columns. Rows where no column
  // is admissible yield zeros and set *all_masked (never a crash).
  DT masked_softmax_rows(DT a, const std::vector<uint8_t>& key_mask, bool* all_masked);
  // Row-wise normalization (no learned affine; compose with mul_rowvec /
  // add_rowvec for gain and bias).
  DT layer_norm_rows(DT a, double eps = 1e-6);
  DT gelu(DT a);
  DT leaky_relu(DT a, double slope);
  // Row stencil x_i - 2 x_{i+1} + x_{i+2}; (T-2) x C.
  DT second_diff_rows(DT a);
  // Mean absolute difference over all entries; 1 x 1.
  DT l1_loss(DT a, DT target);
  DT mean_all(DT a);

  void backward(DT loss);

  const MatX& value(int idx) const { return nodes_[idx].value; }
  const MatX& grad(int idx) const { return nodes_[idx].grad; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    MatX value;
    MatX grad;
    std::function<void()> back;  // empty for leaves
  };
  friend class DT;

  int push(MatX value, std::function<void()> back = {});
  MatX& grad_ref(int idx) { return nodes_[idx].grad; }

  std::vector<Node> nodes_;
};

}  // namespace hoi
