#pragma once

#include <functional>
#include <vector>

#include "hoi/common.hpp"

namespace hoi {

struct AdamOptions {
  VecX lr;  // per-component step size
  int max_iters = 1000;
  double grad_tol = 1e-5;  // infinity norm
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double reject_shrink = 0.5;
  double recover_grow = 1.05;
  double min_lr_scale = 1e-10;
  bool record_trace = true;
};

struct OptResult {
  double initial_energy = 0;
  double final_energy = 0;
  int iterations = 0;
  bool converged = false;      // gradient norm under tolerance
  bool hit_max_iters = false;  // stopped without meeting the tolerance
  std::vector<double> trace;   // energies of accepted steps
};

// Returns the energy and fills the gradient (resized by the callee).
using EnergyFn = std::function<double(const VecX&, VecX&)>;

// Adaptive-moment gradient descent with step rejection: steps that would
// increase the energy are rolled back and the step scale halved, so the
// accepted-energy sequence is monotone non-increasing. Throws
// NonFiniteEnergy when the energy is non-finite at the starting point.
OptResult adam_minimize(VecX& x, const EnergyFn& f, const AdamOptions& opt);

}  // namespace hoi
