#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fieldst/net.hpp"

namespace fieldst {

struct AdamWParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// Cosine annealing with warm restarts. Cycle i has length t0 * t_mult^i
// epochs; the rate anneals lr_max -> lr_min within a cycle and resets to
// lr_max at every cycle boundary.
struct LrSchedule {
  double lr_max = 1e-3;
  double lr_min = 0.0;
  int t0 = 10;
  int t_mult = 2;
};

// Rate at a (possibly fractional) epoch. Always in [lr_min, lr_max].
double lr_at(const LrSchedule& schedule, double epoch);

struct OptimState {
  uint64_t step = 0;
  double base_lr = 1e-3;
  AdamWParams hyper;
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;
};

OptimState make_optim_state(const DenseNet& net, const AdamWParams& hyper = {},
                            double base_lr = 1e-3);

// Decoupled-weight-decay Adam on one parameter block. `step` is the 1-based
// update count used for bias correction.
void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v, const AdamWParams& hyper,
                  double lr, uint64_t step);

// Whole-net update. Rejects non-finite gradients before touching any state.
void adamw_step(DenseNet& net, const Gradients& grads, OptimState& state, double lr);

}  // namespace fieldst
