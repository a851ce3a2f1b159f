#include "fieldst/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fieldst {

double lr_at(const LrSchedule& schedule, double epoch) {
  if (schedule.t0 < 1) throw std::invalid_argument("schedule t0 must be >= 1");
  if (schedule.t_mult < 1) throw std::invalid_argument("schedule t_mult must be >= 1");
  if (epoch < 0.0) epoch = 0.0;

  double cycle_len = schedule.t0;
  double t_cur;
  if (schedule.t_mult == 1) {
    t_cur = std::fmod(epoch, cycle_len);
  } else {
    double start = 0.0;
    while (epoch - start >= cycle_len) {
      start += cycle_len;
      cycle_len *= schedule.t_mult;
    }
    t_cur = epoch - start;
  }
  const double lr = schedule.lr_min +
                    0.5 * (schedule.lr_max - schedule.lr_min) *
                        (1.0 + std::cos(std::numbers::pi * t_cur / cycle_len));
  return std::clamp(lr, schedule.lr_min, schedule.lr_max);
}

OptimState make_optim_state(const DenseNet& net, const AdamWParams& hyper, double base_lr) {
  OptimState state;
  state.hyper = hyper;
  state.base_lr = base_lr;
  state.m_weights.resize(net.weights.size());
  state.v_weights.resize(net.weights.size());
  state.m_biases.resize(net.biases.size());
  state.v_biases.resize(net.biases.size());
  for (size_t k = 0; k < net.weights.size(); ++k) {
    state.m_weights[k].assign(net.weights[k].size(), 0.0);
    state.v_weights[k].assign(net.weights[k].size(), 0.0);
    state.m_biases[k].assign(net.biases[k].size(), 0.0);
    state.v_biases[k].assign(net.biases[k].size(), 0.0);
  }
  return state;
}

void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v, const AdamWParams& hyper,
                  double lr, uint64_t step) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
    throw std::invalid_argument("adamw_update shape mismatch");
  if (lr < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + hyper.eps) + hyper.weight_decay * params[i]);
  }
}

void adamw_step(DenseNet& net, const Gradients& grads, OptimState& state, double lr) {
  if (grads.weights.size() != net.weights.size() || grads.biases.size() != net.biases.size())
    throw std::invalid_argument("gradient layer count mismatch");
  for (size_t k = 0; k < net.weights.size(); ++k) {
    if (grads.weights[k].size() != net.weights[k].size() ||
        grads.biases[k].size() != net.biases[k].size())
      throw std::invalid_argument("gradient shape mismatch");
    for (double g : grads.weights[k])
      if (!std::isfinite(g)) throw std::invalid_argument("non-finite weight gradient");
    for (double g : grads.biases[k])
      if (!std::isfinite(g)) throw std::invalid_argument("non-finite bias gradient");
  }
  const uint64_t step = state.step + 1;
  for (size_t k = 0; k < net.weights.size(); ++k) {
    adamw_update(net.weights[k], grads.weights[k], state.m_weights[k], state.v_weights[k],
                 state.hyper, lr, step);
    adamw_update(net.biases[k], grads.biases[k], state.m_biases[k], state.v_biases[k],
                 state.hyper, lr, step);
  }
  state.step = step;
}

}  // namespace fieldst
