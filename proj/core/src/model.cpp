#include "tla/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tla/random.hpp"

namespace tla {

namespace {

Layer make_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Layer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : layer.weights.values()) w = dist(rng);
  return layer;
}

Matrix affine(const Matrix& in, const Layer& layer) {
  const std::size_t n = in.rows(), fan_in = in.cols(), fan_out = layer.bias.size();
  Matrix out(n, fan_out);
  for (std::size_t i = 0; i < n; ++i) {
    auto o = out.row(i);
    std::copy(layer.bias.begin(), layer.bias.end(), o.begin());
    auto x = in.row(i);
    for (std::size_t j = 0; j < fan_in; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      auto w = layer.weights.row(j);
      for (std::size_t c = 0; c < fan_out; ++c) o[c] += xj * w[c];
    }
  }
  return out;
}

void relu_inplace(Matrix& m) {
  for (double& v : m.values()) v = std::max(v, 0.0);
}

void check_input(const ModelParams& params, const Matrix& instances) {
  if (instances.cols() != params.input_dim && instances.rows() > 0) {
    throw std::invalid_argument("model: instance dimension " + std::to_string(instances.cols()) +
                                " does not match model input " + std::to_string(params.input_dim));
  }
}

// Gradient of a layer given its input activations and the upstream gradient
// on its output.
Layer layer_grad(const Matrix& in, const Matrix& upstream, std::size_t fan_out) {
  Layer g{Matrix(in.cols(), fan_out), std::vector<double>(fan_out, 0.0)};
  for (std::size_t i = 0; i < in.rows(); ++i) {
    auto u = upstream.row(i);
    auto x = in.row(i);
    for (std::size_t c = 0; c < fan_out; ++c) g.bias[c] += u[c];
    for (std::size_t j = 0; j < in.cols(); ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      auto w = g.weights.row(j);
      for (std::size_t c = 0; c < fan_out; ++c) w[c] += xj * u[c];
    }
  }
  return g;
}

std::string tensor_name(std::size_t layer, bool bias) {
  return "layer " + std::to_string(layer + 1) + (bias ? " bias" : " weights");
}

}  // namespace

ModelParams ModelParams::initialize(Architecture arch, std::size_t input_dim, std::size_t class_count,
                                    std::uint64_t seed) {
  if (input_dim == 0 || class_count < 2) throw std::invalid_argument("ModelParams: need d >= 1 and K >= 2");
  Rng rng = make_rng(seed, 0x6d6f64656cULL);
  ModelParams p{arch, input_dim, class_count, {}};
  if (arch.kind == Architecture::Kind::linear) {
    p.layers.push_back(make_layer(input_dim, class_count, rng));
  } else {
    if (arch.hidden_width == 0) throw std::invalid_argument("ModelParams: mlp hidden width must be positive");
    p.layers.push_back(make_layer(input_dim, arch.hidden_width, rng));
    p.layers.push_back(make_layer(arch.hidden_width, class_count, rng));
  }
  return p;
}

bool ModelParams::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const Layer& l) {
    return l.weights.all_finite() &&
           std::all_of(l.bias.begin(), l.bias.end(), [](double b) { return std::isfinite(b); });
  });
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("TrainConfig: learning_rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight_decay must be non-negative");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0))
    throw std::invalid_argument("TrainConfig: decay_factor must lie in (0, 1]");
}

OptimizerState OptimizerState::zeros_like(const ModelParams& params) {
  OptimizerState s;
  for (const Layer& l : params.layers) {
    s.velocity.push_back({Matrix(l.weights.rows(), l.weights.cols()), std::vector<double>(l.bias.size(), 0.0)});
  }
  return s;
}

Matrix forward_logits(const ModelParams& params, const Matrix& instances) {
  check_input(params, instances);
  if (params.architecture.kind == Architecture::Kind::linear) return affine(instances, params.layers[0]);
  Matrix hidden = affine(instances, params.layers[0]);
  relu_inplace(hidden);
  return affine(hidden, params.layers[1]);
}

Matrix extract_features(const ModelParams& params, const Matrix& instances) {
  check_input(params, instances);
  if (params.architecture.kind == Architecture::Kind::linear) return instances;
  Matrix hidden = affine(instances, params.layers[0]);
  relu_inplace(hidden);
  return hidden;
}

ParamGrads backward(const ModelParams& params, const Matrix& instances, const Matrix& upstream,
                    double weight_decay) {
  check_input(params, instances);
  if (upstream.rows() != instances.rows() || upstream.cols() != params.class_count) {
    throw std::invalid_argument("backward: upstream gradient must be N x K");
  }
  ParamGrads grads;
  if (params.architecture.kind == Architecture::Kind::linear) {
    grads.push_back(layer_grad(instances, upstream, params.class_count));
  } else {
    const Layer& out_layer = params.layers[1];
    const std::size_t width = out_layer.weights.rows();
    Matrix pre = affine(instances, params.layers[0]);
    Matrix hidden = pre;
    relu_inplace(hidden);
    Layer g_out = layer_grad(hidden, upstream, params.class_count);
    Matrix g_hidden(instances.rows(), width);
    for (std::size_t i = 0; i < instances.rows(); ++i) {
      auto u = upstream.row(i);
      auto gh = g_hidden.row(i);
      for (std::size_t j = 0; j < width; ++j) {
        if (pre(i, j) <= 0.0) continue;  // ReLU mask
        auto w = out_layer.weights.row(j);
        double acc = 0.0;
        for (std::size_t c = 0; c < params.class_count; ++c) acc += w[c] * u[c];
        gh[j] = acc;
      }
    }
    grads.push_back(layer_grad(instances, g_hidden, width));
    grads.push_back(std::move(g_out));
  }
  if (weight_decay > 0.0) {
    for (std::size_t l = 0; l < grads.size(); ++l) {
      auto g = grads[l].weights.values();
      auto w = params.layers[l].weights.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * weight_decay * w[i];
    }
  }
  return grads;
}

double lr_schedule(std::size_t epoch, const TrainConfig& config) {
  double lr = config.learning_rate;
  if (config.warmup_epochs > 0 && epoch <= config.warmup_epochs) {
    return lr * static_cast<double>(epoch) / static_cast<double>(config.warmup_epochs);
  }
  for (std::size_t milestone : config.decay_epochs)
    if (epoch >= milestone) lr *= config.decay_factor;
  return lr;
}

void sgd_step(ModelParams& params, OptimizerState& state, const ParamGrads& grads,
              const TrainConfig& config, std::size_t epoch) {
  if (grads.size() != params.layers.size() || state.velocity.size() != params.layers.size()) {
    throw std::invalid_argument("sgd_step: gradient/state layer count mismatch");
  }
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (grads[l].weights.rows() != params.layers[l].weights.rows() ||
        grads[l].weights.cols() != params.layers[l].weights.cols() ||
        grads[l].bias.size() != params.layers[l].bias.size()) {
      throw std::invalid_argument("sgd_step: shape mismatch in " + tensor_name(l, false));
    }
    if (!grads[l].weights.all_finite()) throw std::domain_error("sgd_step: non-finite gradient in " + tensor_name(l, false));
    for (double b : grads[l].bias)
      if (!std::isfinite(b)) throw std::domain_error("sgd_step: non-finite gradient in " + tensor_name(l, true));
  }
  const double lr = lr_schedule(epoch, config);
  const double mu = config.momentum;
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto v = state.velocity[l].weights.values();
    auto g = grads[l].weights.values();
    auto w = params.layers[l].weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = mu * v[i] + g[i];
      w[i] -= lr * v[i];
    }
    auto& vb = state.velocity[l].bias;
    auto& b = params.layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) {
      vb[i] = mu * vb[i] + grads[l].bias[i];
      b[i] -= lr * vb[i];
    }
  }
}

double train_epoch(ModelParams& params, OptimizerState& state, const LabeledDataset& data,
                   const GeneralizedLossSpec& spec, const TrainConfig& config, std::size_t epoch) {
  if (data.empty()) throw std::invalid_argument("train_epoch: empty dataset");
  config.validate();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(config.seed, epoch);
  std::shuffle(order.begin(), order.end(), rng);

  double weighted = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
    const std::size_t count = std::min(config.batch_size, order.size() - start);
    std::span<const std::size_t> idx(order.data() + start, count);
    const Matrix x = data.instances().gather_rows(idx);
    std::vector<ClassIndex> y(count);
    for (std::size_t i = 0; i < count; ++i) y[i] = data.labels()[idx[i]];

    const Matrix logits = forward_logits(params, x);
    LossEvaluation eval;
    try {
      eval = evaluate_batch_loss(spec, logits, y, true);
    } catch (const std::domain_error& e) {
      throw std::domain_error("train_epoch: epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index + 1) + ": " + e.what());
    }
    if (!std::isfinite(eval.loss)) {
      throw std::domain_error("train_epoch: non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index + 1));
    }
    weighted += eval.loss * static_cast<double>(count);
    const ParamGrads grads = backward(params, x, eval.gradient, config.weight_decay);
    sgd_step(params, state, grads, config, epoch);
  }
  state.epoch = epoch;
  return weighted / static_cast<double>(data.size());
}

ClassIndex argmax_row(std::span<const double> values) {
  return static_cast<ClassIndex>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<ClassIndex> predict(const ModelParams& params, const Matrix& instances) {
  const Matrix logits = forward_logits(params, instances);
  std::vector<ClassIndex> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) out[i] = argmax_row(logits.row(i));
  return out;
}

}  // namespace tla
