#include "fieldst/net.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "fieldst/rng.hpp"

namespace fieldst {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("net needs at least input and output layers");
  for (int s : sizes)
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
}

inline double hidden_act(double z) { return z > 0.0 ? z : kLeakyReluSlope * z; }

// Post-activations preserve the sign of pre-activations, so the derivative
// can be read off the stored activation.
inline double hidden_act_grad(double a) { return a > 0.0 ? 1.0 : kLeakyReluSlope; }

// Eight independent accumulator lanes so the reduction vectorizes; the
// lane layout and final summation order are fixed, keeping results
// bit-identical across runs and between the single and batched paths.
inline double dot_product(const double* a, const double* b, int n) {
  constexpr int kLanes = 8;
  double lane[kLanes] = {};
  int i = 0;
  for (; i + kLanes <= n; i += kLanes)
    for (int l = 0; l < kLanes; ++l) lane[l] += a[i + l] * b[i + l];
  double sum = 0.0;
  for (int l = 0; l < kLanes; ++l) sum += lane[l];
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace

size_t DenseNet::parameter_count() const {
  size_t n = 0;
  for (size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
  return n;
}

DenseNet make_dense_net(const std::vector<int>& layer_sizes, uint64_t seed) {
  check_sizes(layer_sizes);
  DenseNet net;
  net.layer_sizes = layer_sizes;
  Rng rng(seed);
  const int layers = net.num_weight_layers();
  net.weights.resize(static_cast<size_t>(layers));
  net.biases.resize(static_cast<size_t>(layers));
  for (int k = 0; k < layers; ++k) {
    const int fan_in = layer_sizes[static_cast<size_t>(k)];
    const int fan_out = layer_sizes[static_cast<size_t>(k) + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    auto& w = net.weights[static_cast<size_t>(k)];
    w.resize(static_cast<size_t>(fan_out) * fan_in);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    net.biases[static_cast<size_t>(k)].assign(static_cast<size_t>(fan_out), 0.0);
  }
  return net;
}

void Gradients::set_zero() {
  for (auto& w : weights) std::memset(w.data(), 0, w.size() * sizeof(double));
  for (auto& b : biases) std::memset(b.data(), 0, b.size() * sizeof(double));
}

Gradients make_gradients(const DenseNet& net) {
  Gradients g;
  g.weights.resize(net.weights.size());
  g.biases.resize(net.biases.size());
  for (size_t k = 0; k < net.weights.size(); ++k) {
    g.weights[k].assign(net.weights[k].size(), 0.0);
    g.biases[k].assign(net.biases[k].size(), 0.0);
  }
  return g;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_size())
    throw std::invalid_argument("input length " + std::to_string(x.size()) +
                                " does not match net input size " +
                                std::to_string(net.input_size()));
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> next;
  const int layers = net.num_weight_layers();
  for (int k = 0; k < layers; ++k) {
    const int in = net.layer_sizes[static_cast<size_t>(k)];
    const int out = net.layer_sizes[static_cast<size_t>(k) + 1];
    const double* w = net.weights[static_cast<size_t>(k)].data();
    const double* b = net.biases[static_cast<size_t>(k)].data();
    next.resize(static_cast<size_t>(out));
    const bool hidden = k + 1 < layers;
    for (int o = 0; o < out; ++o) {
      const double z = b[o] + dot_product(w + static_cast<size_t>(o) * in, a.data(), in);
      next[static_cast<size_t>(o)] = hidden ? hidden_act(z) : z;
    }
    a.swap(next);
  }
  return a;
}

Gradients backward(const DenseNet& net, std::span<const double> x,
                   std::span<const double> upstream) {
  if (static_cast<int>(x.size()) != net.input_size())
    throw std::invalid_argument("input length does not match net input size");
  if (static_cast<int>(upstream.size()) != net.output_size())
    throw std::invalid_argument("upstream gradient length does not match net output size");

  const int layers = net.num_weight_layers();
  // Forward pass, keeping every activation.
  std::vector<std::vector<double>> acts(static_cast<size_t>(layers) + 1);
  acts[0].assign(x.begin(), x.end());
  for (int k = 0; k < layers; ++k) {
    const int in = net.layer_sizes[static_cast<size_t>(k)];
    const int out = net.layer_sizes[static_cast<size_t>(k) + 1];
    const double* w = net.weights[static_cast<size_t>(k)].data();
    const double* b = net.biases[static_cast<size_t>(k)].data();
    const double* a = acts[static_cast<size_t>(k)].data();
    auto& next = acts[static_cast<size_t>(k) + 1];
    next.resize(static_cast<size_t>(out));
    const bool hidden = k + 1 < layers;
    for (int o = 0; o < out; ++o) {
      const double z = b[o] + dot_product(w + static_cast<size_t>(o) * in, a, in);
      next[static_cast<size_t>(o)] = hidden ? hidden_act(z) : z;
    }
  }

  Gradients grads = make_gradients(net);
  std::vector<double> dz(upstream.begin(), upstream.end());
  std::vector<double> da;
  for (int k = layers - 1; k >= 0; --k) {
    const int in = net.layer_sizes[static_cast<size_t>(k)];
    const int out = net.layer_sizes[static_cast<size_t>(k) + 1];
    const double* w = net.weights[static_cast<size_t>(k)].data();
    const double* a = acts[static_cast<size_t>(k)].data();
    double* gw = grads.weights[static_cast<size_t>(k)].data();
    double* gb = grads.biases[static_cast<size_t>(k)].data();
    for (int o = 0; o < out; ++o) {
      const double d = dz[static_cast<size_t>(o)];
      gb[o] += d;
      double* grow = gw + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) grow[i] += d * a[i];
    }
    if (k > 0) {
      da.assign(static_cast<size_t>(in), 0.0);
      for (int o = 0; o < out; ++o) {
        const double d = dz[static_cast<size_t>(o)];
        const double* row = w + static_cast<size_t>(o) * in;
        for (int i = 0; i < in; ++i) da[static_cast<size_t>(i)] += d * row[i];
      }
      const double* prev = acts[static_cast<size_t>(k)].data();
      dz.resize(static_cast<size_t>(in));
      for (int i = 0; i < in; ++i) dz[static_cast<size_t>(i)] = da[static_cast<size_t>(i)] * hidden_act_grad(prev[i]);
    }
  }
  return grads;
}

void forward_batch(const DenseNet& net, std::span<const double> x, int batch,
                   BatchWorkspace& ws) {
  const int in0 = net.input_size();
  if (batch <= 0) throw std::invalid_argument("batch must be positive");
  if (x.size() != static_cast<size_t>(batch) * in0)
    throw std::invalid_argument("batched input has wrong size");

  const int layers = net.num_weight_layers();
  ws.batch = batch;
  ws.acts.resize(static_cast<size_t>(layers) + 1);
  ws.delta.resize(static_cast<size_t>(layers) + 1);
  ws.acts[0].assign(x.begin(), x.end());
  for (int k = 0; k < layers; ++k) {
    const int in = net.layer_sizes[static_cast<size_t>(k)];
    const int out = net.layer_sizes[static_cast<size_t>(k) + 1];
    const double* w = net.weights[static_cast<size_t>(k)].data();
    const double* b = net.biases[static_cast<size_t>(k)].data();
    const double* a = ws.acts[static_cast<size_t>(k)].data();
    auto& next = ws.acts[static_cast<size_t>(k) + 1];
    next.resize(static_cast<size_t>(batch) * out);
    const bool hidden = k + 1 < layers;
    // Output-row outer loop keeps each weight row hot across the batch.
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<size_t>(o) * in;
      for (int s = 0; s < batch; ++s) {
        const double z = b[o] + dot_product(row, a + static_cast<size_t>(s) * in, in);
        next[static_cast<size_t>(s) * out + o] = hidden ? hidden_act(z) : z;
      }
    }
  }
}

void backward_batch(const DenseNet& net, BatchWorkspace& ws, std::span<const double> dy,
                    Gradients& grads) {
  const int batch = ws.batch;
  const int layers = net.num_weight_layers();
  if (dy.size() != static_cast<size_t>(batch) * net.output_size())
    throw std::invalid_argument("upstream gradient has wrong size");

  ws.delta[static_cast<size_t>(layers)].assign(dy.begin(), dy.end());
  for (int k = layers - 1; k >= 0; --k) {
    const int in = net.layer_sizes[static_cast<size_t>(k)];
    const int out = net.layer_sizes[static_cast<size_t>(k) + 1];
    const double* w = net.weights[static_cast<size_t>(k)].data();
    const double* a = ws.acts[static_cast<size_t>(k)].data();
    const double* dz = ws.delta[static_cast<size_t>(k) + 1].data();
    double* gw = grads.weights[static_cast<size_t>(k)].data();
    double* gb = grads.biases[static_cast<size_t>(k)].data();
    for (int o = 0; o < out; ++o) {
      double* grow = gw + static_cast<size_t>(o) * in;
      double gbias = 0.0;
      for (int s = 0; s < batch; ++s) {
        const double d = dz[static_cast<size_t>(s) * out + o];
        gbias += d;
        const double* as = a + static_cast<size_t>(s) * in;
        for (int i = 0; i < in; ++i) grow[i] += d * as[i];
      }
      gb[o] += gbias;
    }
    if (k > 0) {
      auto& dprev = ws.delta[static_cast<size_t>(k)];
      dprev.assign(static_cast<size_t>(batch) * in, 0.0);
      for (int o = 0; o < out; ++o) {
        const double* row = w + static_cast<size_t>(o) * in;
        for (int s = 0; s < batch; ++s) {
          const double d = dz[static_cast<size_t>(s) * out + o];
          double* ds = dprev.data() + static_cast<size_t>(s) * in;
          for (int i = 0; i < in; ++i) ds[i] += d * row[i];
        }
      }
      for (int s = 0; s < batch; ++s) {
        double* ds = dprev.data() + static_cast<size_t>(s) * in;
        const double* as = a + static_cast<size_t>(s) * in;
        for (int i = 0; i < in; ++i) ds[i] *= hidden_act_grad(as[i]);
      }
    }
  }
}

double l1_loss(std::span<const double> pred, std::span<const double> target,
               std::span<double> grad) {
  const size_t n = pred.size();
  if (target.size() != n) throw std::invalid_argument("l1_loss length mismatch");
  if (!grad.empty() && grad.size() != n)
    throw std::invalid_argument("l1_loss gradient length mismatch");
  if (n == 0) throw std::invalid_argument("l1_loss on empty vectors");
  const double inv = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = target[i] - pred[i];
    sum += std::abs(d);
    if (!grad.empty()) grad[i] = d > 0.0 ? -inv : (d < 0.0 ? inv : 0.0);
  }
  return sum * inv;
}

double weighted_l1_loss(std::span<const double> pred, std::span<const double> target,
                        std::span<const double> weight, std::span<double> grad) {
  const size_t n = pred.size();
  if (target.size() != n || weight.size() != n)
    throw std::invalid_argument("weighted_l1_loss length mismatch");
  if (!grad.empty() && grad.size() != n)
    throw std::invalid_argument("weighted_l1_loss gradient length mismatch");
  if (n == 0) throw std::invalid_argument("weighted_l1_loss on empty vectors");
  const double inv = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double w = weight[i];
    if (!(w >= 0.0 && w <= 1.0))
      throw std::invalid_argument("weight outside [0, 1] at index " + std::to_string(i));
    const double d = target[i] - pred[i];
    sum += w * std::abs(d);
    if (!grad.empty()) grad[i] = d > 0.0 ? -w * inv : (d < 0.0 ? w * inv : 0.0);
  }
  return sum * inv;
}

}  // namespace fieldst
