#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fieldst/optim.hpp"
#include "fieldst/rng.hpp"

using namespace fieldst;

TEST_SUITE("optim") {

TEST_CASE("adamw leaves params unchanged with zero grad and zero decay") {
  DenseNet net;
  net.layer_sizes = {1, 1};
  net.weights = {{0.75}};
  net.biases = {{-0.25}};
  AdamWParams hyper;
  hyper.weight_decay = 0.0;
  OptimState state = make_optim_state(net, hyper);
  Gradients g = make_gradients(net);
  adamw_step(net, g, state, 1e-3);
  CHECK(net.weights[0][0] == 0.75);
  CHECK(net.biases[0][0] == -0.25);
  CHECK(state.step == 1);
}

TEST_CASE("adamw single step closed form") {
  // w=1, g=1, lr=1e-3, defaults, wd=0: bias-corrected m_hat = v_hat = 1, so
  // the step is lr/(1 + eps) and w lands at ~0.999.
  std::vector<double> p{1.0}, g{1.0}, m{0.0}, v{0.0};
  AdamWParams hyper;
  hyper.weight_decay = 0.0;
  adamw_update(p, g, m, v, hyper, 1e-3, 1);
  CHECK(p[0] == doctest::Approx(0.999).epsilon(1e-9));
}

TEST_CASE("adamw decay-only step") {
  std::vector<double> p{1.0}, g{0.0}, m{0.0}, v{0.0};
  AdamWParams hyper;  // wd defaults to 1e-2
  adamw_update(p, g, m, v, hyper, 1e-3, 1);
  CHECK(p[0] == doctest::Approx(1.0 * (1.0 - 1e-3 * 1e-2)).epsilon(1e-15));
}

TEST_CASE("adamw rejects non-finite gradients without touching state") {
  DenseNet net;
  net.layer_sizes = {1, 1};
  net.weights = {{0.5}};
  net.biases = {{0.1}};
  OptimState state = make_optim_state(net, {});
  Gradients g = make_gradients(net);
  g.weights[0][0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adamw_step(net, g, state, 1e-3), std::invalid_argument);
  CHECK(net.weights[0][0] == 0.5);
  CHECK(state.step == 0);
  CHECK(state.m_weights[0][0] == 0.0);
}

TEST_CASE("adamw is deterministic") {
  auto run = [] {
    DenseNet net = make_dense_net({3, 4, 2}, 9);
    OptimState state = make_optim_state(net, {});
    Gradients g = make_gradients(net);
    Rng rng(13);
    for (int step = 0; step < 10; ++step) {
      for (auto& layer : g.weights)
        for (auto& v : layer) v = rng.uniform(-1.0, 1.0);
      for (auto& layer : g.biases)
        for (auto& v : layer) v = rng.uniform(-1.0, 1.0);
      adamw_step(net, g, state, 1e-3);
    }
    return net;
  };
  const DenseNet a = run();
  const DenseNet b = run();
  CHECK(a.weights == b.weights);
  CHECK(a.biases == b.biases);
}

TEST_CASE("schedule hits lr_max at epoch zero") {
  LrSchedule s;  // lr_max 1e-3
  CHECK(lr_at(s, 0.0) == 0.001);
}

TEST_CASE("schedule midpoint is the average of the extremes") {
  LrSchedule s;
  s.lr_min = 2e-4;
  CHECK(lr_at(s, 5.0) == doctest::Approx((s.lr_max + s.lr_min) / 2.0).epsilon(1e-12));
}

TEST_CASE("schedule restarts at cycle boundaries") {
  LrSchedule s;  // t0=10, t_mult=2: cycles start at 0, 10, 30, 70
  CHECK(lr_at(s, 10.0) == doctest::Approx(s.lr_max));
  CHECK(lr_at(s, 30.0) == doctest::Approx(s.lr_max));
  CHECK(lr_at(s, 70.0) == doctest::Approx(s.lr_max));
  // Just before a boundary the rate has annealed to ~lr_min.
  CHECK(lr_at(s, 29.999) < 1e-6);
}

TEST_CASE("schedule stays within [lr_min, lr_max] for every t_mult") {
  for (int t_mult : {1, 2, 3}) {
    LrSchedule s;
    s.t_mult = t_mult;
    s.lr_min = 1e-5;
    for (double epoch = 0.0; epoch < 200.0; epoch += 0.37) {
      const double lr = lr_at(s, epoch);
      CHECK(lr >= s.lr_min);
      CHECK(lr <= s.lr_max);
    }
  }
}

TEST_CASE("schedule with t_mult 1 repeats the base cycle") {
  LrSchedule s;
  s.t_mult = 1;
  for (int cycle = 0; cycle < 5; ++cycle)
    CHECK(lr_at(s, 10.0 * cycle) == doctest::Approx(s.lr_max));
}

}  // TEST_SUITE
