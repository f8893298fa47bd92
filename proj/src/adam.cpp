#include "hoi/fit/adam.hpp"

#include <cmath>
#include <sstream>

namespace hoi {

OptResult adam_minimize(VecX& x, const EnergyFn& f, const AdamOptions& opt) {
  OptResult res;
  VecX grad(x.size());
  double energy = f(x, grad);
  if (!std::isfinite(energy) || !grad.allFinite()) {
    throw NonFiniteEnergy("adam: non-finite energy at iteration 0");
  }
  res.initial_energy = energy;
  if (opt.record_trace) res.trace.push_back(energy);

  VecX m = VecX::Zero(x.size());
  VecX v = VecX::Zero(x.size());
  double lr_scale = 1.0;
  int t = 0;

  for (int it = 0; it < opt.max_iters; ++it) {
    res.iterations = it + 1;
    if (grad.cwiseAbs().maxCoeff() < opt.grad_tol) {
      res.converged = true;
      break;
    }
    // Propose a step; commit the moment update only on acceptance.
    const VecX m_new = opt.beta1 * m + (1 - opt.beta1) * grad;
    const VecX v_new = opt.beta2 * v + (1 - opt.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1 - std::pow(opt.beta1, t + 1);
    const double bc2 = 1 - std::pow(opt.beta2, t + 1);
    const VecX denom = (v_new / bc2).cwiseSqrt() + VecX::Constant(x.size(), opt.eps);
    const VecX step = (m_new / bc1).cwiseQuotient(denom);
    const VecX x_new = x - lr_scale * opt.lr.cwiseProduct(step);

    VecX grad_new(x.size());
    double energy_new;
    bool ok = true;
    try {
      energy_new = f(x_new, grad_new);
    } catch (const Error&) {
      ok = false;
      energy_new = 0;
    }
    if (!ok || !std::isfinite(energy_new) || !grad_new.allFinite() || energy_new > energy) {
      lr_scale *= opt.reject_shrink;
      if (lr_scale < opt.min_lr_scale) {
        res.hit_max_iters = true;
        break;
      }
      continue;
    }
    x = x_new;
    energy = energy_new;
    grad = grad_new;
    m = m_new;
    v = v_new;
    ++t;
    lr_scale = std::min(1.0, lr_scale * opt.recover_grow);
    if (opt.record_trace) res.trace.push_back(energy);
  }
  if (!res.converged && res.iterations >= opt.max_iters) res.hit_max_iters = true;
  res.final_energy = energy;
  return res;
}

}  // namespace hoi
