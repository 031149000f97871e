#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tla/data.hpp"
#include "tla/losses.hpp"
#include "tla/matrix.hpp"

namespace tla {

struct Architecture {
  enum class Kind { linear, mlp };
  Kind kind = Kind::linear;
  std::size_t hidden_width = 0;  // mlp only

  static Architecture linear() { return {Kind::linear, 0}; }
  static Architecture mlp(std::size_t width) { return {Kind::mlp, width}; }
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// One affine layer: out = in * weights + bias, weights is fan_in x fan_out.
struct Layer {
  Matrix weights;
  std::vector<double> bias;
  friend bool operator==(const Layer&, const Layer&) = default;
};

struct ModelParams {
  Architecture architecture;
  std::size_t input_dim = 0;
  std::size_t class_count = 0;
  std::vector<Layer> layers;  // linear: 1 layer; mlp: hidden then output

  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  static ModelParams initialize(Architecture arch, std::size_t input_dim, std::size_t class_count,
                                std::uint64_t seed);
  bool all_finite() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using ParamGrads = std::vector<Layer>;

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 2e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 200;
  std::size_t warmup_epochs = 5;
  std::vector<std::size_t> decay_epochs;  // multiply by decay_factor from each of these on
  double decay_factor = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizerState {
  std::vector<Layer> velocity;
  std::size_t epoch = 0;

  static OptimizerState zeros_like(const ModelParams& params);
};

Matrix forward_logits(const ModelParams& params, const Matrix& instances);

// Chain-rule gradients of sum_ik upstream(i,k) * f_k(x_i) with respect to
// every parameter, plus 2 * weight_decay * W on weight matrices (not biases).
ParamGrads backward(const ModelParams& params, const Matrix& instances, const Matrix& upstream_logit_grad,
                    double weight_decay = 0.0);

// Linear warmup from 0 to the peak over warmup_epochs, then piecewise-constant
// decay. Epochs are 1-based.
double lr_schedule(std::size_t epoch, const TrainConfig& config);

// v <- momentum * v + g; theta <- theta - lr_schedule(epoch) * v.
void sgd_step(ModelParams& params, OptimizerState& state, const ParamGrads& grads,
              const TrainConfig& config, std::size_t epoch);

// One pass of seeded-shuffled mini-batches; returns the sample-weighted mean
// batch loss. The shuffle depends on (config.seed, epoch).
double train_epoch(ModelParams& params, OptimizerState& state, const LabeledDataset& data,
                   const GeneralizedLossSpec& spec, const TrainConfig& config, std::size_t epoch);

// Argmax of the logits; the smallest class index wins ties.
std::vector<ClassIndex> predict(const ModelParams& params, const Matrix& instances);
ClassIndex argmax_row(std::span<const double> values);

// Input to the final layer: hidden activations for mlp, raw inputs for linear.
Matrix extract_features(const ModelParams& params, const Matrix& instances);

}  // namespace tla
