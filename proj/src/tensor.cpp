#include "hoi/hvop/tensor.hpp"

#include <cmath>

namespace hoi {

const MatX& DT::value() const { return tape_->value(idx_); }
const MatX& DT::grad() const { return tape_->grad(idx_); }

int Tape::push(MatX value, std::function<void()> back) {
  Node n;
  n.grad = MatX::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

DT Tape::input(MatX value) { return DT(this, push(std::move(value))); }

DT Tape::add(DT a, DT b) {
  const int ia = a.idx_, ib = b.idx_;
  const int out = push(nodes_[ia].value + nodes_[ib].value, {});
  nodes_[out].back = [this, ia, ib, out]() {
    nodes_[ia].grad += nodes_[out].grad;
    nodes_[ib].grad += nodes_[out].grad;
  };
  return DT(this, out);
}

DT Tape::sub(DT a, DT b) {
  const int ia = a.idx_, ib = b.idx_;
  const int out = push(nodes_[ia].value - nodes_[ib].value);
  nodes_[out].back = [this, ia, ib, out]() {
    nodes_[ia].grad += nodes_[out].grad;
    nodes_[ib].grad -= nodes_[out].grad;
  };
  return DT(this, out);
}

DT Tape::scale(DT a, double s) {
  const int ia = a.idx_;
  const int out = push(s * nodes_[ia].value);
  nodes_[out].back = [this, ia, out, s]() { nodes_[ia].grad += s * nodes_[out].grad; };
  return DT(this, out);
}

DT Tape::add_const(DT a, const MatX& c) {
  const int ia = a.idx_;
  const int out = push(nodes_[ia].value + c);
  nodes_[out].back = [this, ia, out]() { nodes_[ia].grad += nodes_[out].grad; };
  return DT(this, out);
}

DT Tape::matmul(DT a, DT b) {
  const int ia = a.idx_, ib = b.idx_;
  const int out = push(nodes_[ia].value * nodes_[ib].value);
  nodes_[out].back = [this, ia, ib, out]() {
    nodes_[ia].grad += nodes_[out].grad * nodes_[ib].value.transpose();
    nodes_[ib].grad += nodes_[ia].value.transpose() * nodes_[out].grad;
  };
  return DT(this, out);
}

DT Tape::hadamard(DT a, DT b) {
  const int ia = a.idx_, ib = b.idx_;
  const int out = push(nodes_[ia].value.cwiseProduct(nodes_[ib].value));
  nodes_[out].back = [this, ia, ib, out]() {
    nodes_[ia].grad += nodes_[out].grad.cwiseProduct(nodes_[ib].value);
    nodes_[ib].grad += nodes_[out].grad.cwiseProduct(nodes_[ia].value);
  };
  return DT(this, out);
}

DT Tape::transpose(DT a) {
  const int ia = a.idx_;
  const int out = push(nodes_[ia].value.transpose());
  nodes_[out].back = [this, ia, out]() { nodes_[ia].grad += nodes_[out].grad.transpose(); };
  return DT(this, out);
}

DT Tape::add_rowvec(DT a, DT row) {
  const int ia = a.idx_, ir = row.idx_;
  MatX v = nodes_[ia].value;
  v.rowwise() += nodes_[ir].value.row(0);
  const int out = push(std::move(v));
  nodes_[out].back = [this, ia, ir, out]() {
    nodes_[ia].grad += nodes_[out].grad;
    nodes_[ir].grad.row(0) += nodes_[out].grad.colwise().sum();
  };
  return DT(this, out);
}

DT Tape::mul_rowvec(DT a, DT row) {
  const int ia = a.idx_, ir = row.idx_;
  MatX v = nodes_[ia].value;
  v.array().rowwise() *= nodes_[ir].value.row(0).array();
  const int out = push(std::move(v));
  nodes_[out].back = [this, ia, ir, out]() {
    nodes_[ia].grad.array() +=
        nodes_[out].grad.array().rowwise() * nodes_[ir].value.row(0).array();
    nodes_[ir].grad.row(0).array() +=
        (nodes_[out].grad.array() * nodes_[ia].value.array()).colwise().sum();
  };
  return DT(this, out);
}

DT Tape::concat_cols(DT a, DT b) {
  const int ia = a.idx_, ib = b.idx_;
  MatX v(nodes_[ia].value.rows(), nodes_[ia].value.cols() + nodes_[ib].value.cols());
  v << nodes_[ia].value, nodes_[ib].value;
  const int out = push(std::move(v));
  const int ca = static_cast<int>(nodes_[ia].value.cols());
  nodes_[out].back = [this, ia, ib, out, ca]() {
    nodes_[ia].grad += nodes_[out].grad.leftCols(ca);
    nodes_[ib].grad += nodes_[out].grad.rightCols(nodes_[ib].value.cols());
  };
  return DT(this, out);
}

DT Tape::slice_cols(DT a, int begin, int n) {
  const int ia = a.idx_;
  const int out = push(nodes_[ia].value.middleCols(begin, n));
  nodes_[out].back = [this, ia, out, begin, n]() {
    nodes_[ia].grad.middleCols(begin, n) += nodes_[out].grad;
  };
  return DT(this, out);
}

DT Tape::softmax_rows(DT a) {
  const int ia = a.idx_;
  MatX y = nodes_[ia].value;
  for (int r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  const int out = push(std::move(y));
  nodes_[out].back = [this, ia, out]() {
    const MatX& y_ = nodes_[out].value;
    const MatX& gy = nodes_[out].grad;
    for (int r = 0; r < y_.rows(); ++r) {
      const double dot = y_.row(r).dot(gy.row(r));
      nodes_[ia].grad.row(r) += (gy.row(r).array() - dot).matrix().cwiseProduct(y_.row(r));
    }
  };
  return DT(this, out);
}

DT Tape::masked_softmax_rows(DT a, const std::vector<uint8_t>& key_mask, bool* all_masked) {
  const int ia = a.idx_;
  const MatX& x = nodes_[ia].value;
  if (static_cast<int>(key_mask.size()) != x.cols()) {
    throw LengthMismatch("masked_softmax: mask size != key count");
  }
  bool any_key = false;
  for (uint8_t m : key_mask) any_key = any_key || m;
  if (!any_key && all_masked) *all_masked = true;

  MatX y = MatX::Zero(x.rows(), x.cols());
  if (any_key) {
    for (int r = 0; r < x.rows(); ++r) {
      double m = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < x.cols(); ++c) {
        if (key_mask[c]) m = std::max(m, x(r, c));
      }
      double sum = 0;
      for (int c = 0; c < x.cols(); ++c) {
        if (key_mask[c]) {
          y(r, c) = std::exp(x(r, c) - m);
          sum += y(r, c);
        }
      }
      y.row(r) /= sum;
    }
  }
  const int out = push(std::move(y));
  nodes_[out].back = [this, ia, out]() {
    const MatX& y_ = nodes_[out].value;
    const MatX& gy = nodes_[out].grad;
    for (int r = 0; r < y_.rows(); ++r) {
      const double dot = y_.row(r).dot(gy.row(r));
      // Masked-out entries are exactly zero in y, so this stays zero there.
      nodes_[ia].grad.row(r) += (gy.row(r).array() - dot).matrix().cwiseProduct(y_.row(r));
    }
  };
  return DT(this, out);
}

DT Tape::layer_norm_rows(DT a, double eps) {
  const int ia = a.idx_;
  const MatX& x = nodes_[ia].value;
  const int d = static_cast<int>(x.cols());
  MatX y(x.rows(), d);
  VecX inv_std(x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    y.row(r) = (x.row(r).array() - mu) * inv_std[r];
  }
  const int out = push(std::move(y));
  nodes_[out].back = [this, ia, out, inv_std, d]() {
    const MatX& y_ = nodes_[out].value;
    const MatX& gy = nodes_[out].grad;
    for (int r = 0; r < y_.rows(); ++r) {
      const double mean_g = gy.row(r).mean();
      const double mean_gy = gy.row(r).dot(y_.row(r)) / d;
      nodes_[ia].grad.row(r) +=
          inv_std[r] * (gy.row(r).array() - mean_g - y_.row(r).array() * mean_gy).matrix();
    }
  };
  return DT(this, out);
}

DT Tape::gelu(DT a) {
  const int ia = a.idx_;
  const MatX& x = nodes_[ia].value;
  const MatX y = x.unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
  const int out = push(y);
  nodes_[out].back = [this, ia, out]() {
    const MatX deriv = nodes_[ia].value.unaryExpr([](double v) {
      const double cdf = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * kPi);
      return cdf + v * pdf;
    });
    nodes_[ia].grad.array() += nodes_[out].grad.array() * deriv.array();
  };
  return DT(this, out);
}

DT Tape::leaky_relu(DT a, double slope) {
  const int ia = a.idx_;
  const MatX& x = nodes_[ia].value;
  const MatX y = x.array().max(slope * x.array());
  const int out = push(y);
  nodes_[out].back = [this, ia, out, slope]() {
    const MatX deriv =
        nodes_[ia].value.unaryExpr([slope](double v) { return v > 0 ? 1.0 : slope; });
    nodes_[ia].grad.array() += nodes_[out].grad.array() * deriv.array();
  };
  return DT(this, out);
}

DT Tape::second_diff_rows(DT a) {
  const int ia = a.idx_;
  const MatX& x = nodes_[ia].value;
  if (x.rows() < 3) throw LengthMismatch("second_diff_rows: need >= 3 rows");
  MatX y(x.rows() - 2, x.cols());
  for (int r = 0; r + 2 < x.rows(); ++r) y.row(r) = x.row(r) - 2 * x.row(r + 1) + x.row(r + 2);
  const int out = push(std::move(y));
  nodes_[out].back = [this, ia, out]() {
    const MatX& gy = nodes_[out].grad;
    for (int r = 0; r < gy.rows(); ++r) {
      nodes_[ia].grad.row(r) += gy.row(r);
      nodes_[ia].grad.row(r + 1) -= 2 * gy.row(r);
      nodes_[ia].grad.row(r + 2) += gy.row(r);
    }
  };
  return DT(this, out);
}

DT Tape::l1_loss(DT a, DT target) {
  const int ia = a.idx_, it = target.idx_;
  const MatX diff = nodes_[ia].value - nodes_[it].value;
  MatX v(1, 1);
  v(0, 0) = diff.cwiseAbs().mean();
  const int out = push(std::move(v));
  const double inv_n = 1.0 / static_cast<double>(diff.size());
  nodes_[out].back = [this, ia, it, out, inv_n]() {
    const double g = nodes_[out].grad(0, 0) * inv_n;
    const MatX sign = (nodes_[ia].value - nodes_[it].value)
                          .unaryExpr([](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); });
    nodes_[ia].grad += g * sign;
    nodes_[it].grad -= g * sign;
  };
  return DT(this, out);
}

DT Tape::mean_all(DT a) {
  const int ia = a.idx_;
  MatX v(1, 1);
  v(0, 0) = nodes_[ia].value.mean();
  const int out = push(std::move(v));
  const double inv_n = 1.0 / static_cast<double>(nodes_[ia].value.size());
  nodes_[out].back = [this, ia, out, inv_n]() {
    nodes_[ia].grad.array() += nodes_[out].grad(0, 0) * inv_n;
  };
  return DT(this, out);
}

void Tape::backward(DT loss) {
  if (loss.tape_ != this) throw DegenerateInput("backward: node from another tape");
  if (nodes_[loss.idx_].value.size() != 1) {
    throw DegenerateInput("backward: loss must be scalar");
  }
  nodes_[loss.idx_].grad(0, 0) = 1.0;
  for (int i = loss.idx_; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back();
  }
}

}  // namespace hoi
