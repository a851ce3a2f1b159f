#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fieldst {

// Hidden-layer nonlinearity. The output layer is always linear.
enum class Activation { leaky_relu };

inline constexpr double kLeakyReluSlope = 0.01;

// Fully connected feedforward network over f64. Weight matrix k maps
// layer_sizes[k] -> layer_sizes[k+1] and is stored row-major (one row per
// output neuron), biases per output neuron.
struct DenseNet {
  std::vector<int> layer_sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  Activation activation = Activation::leaky_relu;

  int num_weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  size_t parameter_count() const;
};

// Fresh net: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
// The RNG stream is consumed row-major, layer by layer.
DenseNet make_dense_net(const std::vector<int>& layer_sizes, uint64_t seed);

std::vector<double> forward(const DenseNet& net, std::span<const double> x);

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void set_zero();
};

Gradients make_gradients(const DenseNet& net);

// Reverse-mode gradients of dot(upstream, net(x)) with respect to every
// parameter.
Gradients backward(const DenseNet& net, std::span<const double> x,
                   std::span<const double> upstream);

// Batched fast paths used by the trainers. Row b of `x` / dy is one sample;
// per-row results are bit-identical to the single-sample functions.
struct BatchWorkspace {
  int batch = 0;
  std::vector<std::vector<double>> acts;   // [0..L]: batch x layer_sizes[k]
  std::vector<std::vector<double>> delta;  // scratch, same shapes as acts
};

// Fills ws.acts; the output is ws.acts.back().
void forward_batch(const DenseNet& net, std::span<const double> x, int batch,
                   BatchWorkspace& ws);

// dy: batch x output_size. Accumulates parameter gradients into `grads`
// (callers zero it once per optimizer step). Consumes ws from forward_batch.
void backward_batch(const DenseNet& net, BatchWorkspace& ws, std::span<const double> dy,
                    Gradients& grads);

// Mean absolute error 1/n * sum |target - pred|. When `grad` is non-empty it
// receives dLoss/dpred = -sign(target - pred)/n with sign(0) = 0.
double l1_loss(std::span<const double> pred, std::span<const double> target,
               std::span<double> grad = {});

// Per-element weighted variant, weights in [0, 1]. With weight identically 1
// the value and gradient are bit-identical to l1_loss.
double weighted_l1_loss(std::span<const double> pred, std::span<const double> target,
                        std::span<const double> weight, std::span<double> grad = {});

}  // namespace fieldst
