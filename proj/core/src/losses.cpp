#include "tla/losses.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace tla {

namespace {

struct VariantName {
  LossVariant variant;
  std::string_view name;
};

constexpr std::array<VariantName, 10> kNames = {{
    {LossVariant::ce, "ce"},
    {LossVariant::wce, "wce"},
    {LossVariant::focal, "focal"},
    {LossVariant::focal_alpha, "focal_alpha"},
    {LossVariant::ldam, "ldam"},
    {LossVariant::la, "la"},
    {LossVariant::vs, "vs"},
    {LossVariant::twce, "twce"},
    {LossVariant::tla, "tla"},
    {LossVariant::gml, "gml"},
}};

bool bit_equal(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](double x, double y) {
    return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
  });
}

void check_batch(std::size_t k, const Matrix& logits, std::span<const ClassIndex> labels) {
  if (logits.rows() == 0) throw std::invalid_argument("batch loss: empty batch");
  if (logits.rows() != labels.size()) throw std::invalid_argument("batch loss: logits/labels row mismatch");
  if (logits.cols() != k) throw std::invalid_argument("batch loss: logits width does not match K");
  if (!logits.all_finite()) throw std::domain_error("batch loss: non-finite logits");
  for (ClassIndex y : labels)
    if (y >= k) throw std::invalid_argument("batch loss: label out of range");
}

// Softmax of z in place; returns log-sum-exp. Max subtraction keeps large
// offsets (|tau ln rho| ~ 10) from overflowing.
double softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

std::vector<double> counts_or_prior(std::span<const std::size_t> counts, const Prior& pi_train) {
  if (!counts.empty()) return {counts.begin(), counts.end()};
  return {pi_train.values().begin(), pi_train.values().end()};
}

}  // namespace

std::string_view loss_variant_name(LossVariant v) {
  for (const auto& [variant, name] : kNames)
    if (variant == v) return name;
  return "unknown";
}

std::optional<LossVariant> parse_loss_variant(std::string_view name) {
  for (const auto& [variant, n] : kNames)
    if (n == name) return variant;
  return std::nullopt;
}

std::string_view loss_variant_names() {
  return "ce, wce, focal, focal_alpha, ldam, la, vs, twce, tla, gml";
}

bool is_targeted(LossVariant v) { return v == LossVariant::tla || v == LossVariant::twce; }

void GeneralizedLossSpec::validate() const {
  const std::size_t k = weights.size();
  if (k < 1 || scales.size() != k || offsets.size() != k) {
    throw std::invalid_argument("GeneralizedLossSpec: weights, scales and offsets must have length K");
  }
  for (std::size_t y = 0; y < k; ++y) {
    if (!(weights[y] > 0.0) || !std::isfinite(weights[y]))
      throw std::invalid_argument("GeneralizedLossSpec: weight must be positive at class " + std::to_string(y + 1));
    if (!(scales[y] > 0.0) || !std::isfinite(scales[y]))
      throw std::invalid_argument("GeneralizedLossSpec: scale must be positive at class " + std::to_string(y + 1));
    if (!std::isfinite(offsets[y]))
      throw std::invalid_argument("GeneralizedLossSpec: non-finite offset at class " + std::to_string(y + 1));
  }
}

bool equivalent(const GeneralizedLossSpec& a, const GeneralizedLossSpec& b) {
  if ((a.variant == LossVariant::gml) != (b.variant == LossVariant::gml)) return false;
  return a.focal() == b.focal() && a.offset_rule == b.offset_rule &&
         bit_equal(a.weights, b.weights) && bit_equal(a.scales, b.scales) &&
         bit_equal(a.offsets, b.offsets);
}

std::vector<double> tla_offsets(const Prior& pi_train, const Prior& pi_target, double tau) {
  if (pi_train.size() != pi_target.size()) throw std::invalid_argument("tla_offsets: prior length mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("tla_offsets: tau must be positive");
  std::vector<double> offsets(pi_train.size());
  for (std::size_t y = 0; y < offsets.size(); ++y) {
    if (pi_target[y] <= 0.0) {
      throw std::domain_error("tla_offsets: target prior is zero at class " + std::to_string(y + 1));
    }
    if (pi_train[y] <= 0.0) {
      throw std::domain_error("tla_offsets: class " + std::to_string(y + 1) + " absent from training data");
    }
    offsets[y] = tau * (std::log(pi_train[y]) - std::log(pi_target[y]));
  }
  return offsets;
}

GeneralizedLossSpec spec_from_variant(LossVariant variant, const Prior& pi_train,
                                      const Prior& pi_target,
                                      std::span<const std::size_t> class_counts,
                                      const LossHyper& hyper) {
  const std::size_t k = pi_train.size();
  if (pi_target.size() != k) throw std::invalid_argument("spec_from_variant: prior length mismatch");
  if (!class_counts.empty() && class_counts.size() != k) {
    throw std::invalid_argument("spec_from_variant: class_counts length must equal K");
  }
  for (std::size_t n : class_counts)
    if (n == 0) throw std::invalid_argument("spec_from_variant: zero class count");

  const auto need_counts = [&](const char* what) {
    if (class_counts.empty()) {
      throw std::invalid_argument(std::string("spec_from_variant: ") + what + " needs class counts");
    }
  };
  const auto need_train = [&](const char* what) {
    if (!pi_train.strictly_positive()) {
      throw std::domain_error(std::string("spec_from_variant: ") + what + " needs every class in training data");
    }
  };

  GeneralizedLossSpec spec;
  spec.variant = variant;
  spec.weights.assign(k, 1.0);
  spec.scales.assign(k, 1.0);
  spec.offsets.assign(k, 0.0);

  switch (variant) {
    case LossVariant::ce:
    case LossVariant::focal:
    case LossVariant::gml:
      break;
    case LossVariant::wce:
    case LossVariant::focal_alpha:
      need_counts(variant == LossVariant::wce ? "wce" : "focal_alpha");
      for (std::size_t y = 0; y < k; ++y) spec.weights[y] = 1.0 / static_cast<double>(class_counts[y]);
      break;
    case LossVariant::ldam: {
      if (!(hyper.ldam_max_margin > 0.0)) throw std::invalid_argument("spec_from_variant: ldam margin must be positive");
      need_train("ldam");
      const std::vector<double> n = counts_or_prior(class_counts, pi_train);
      const double n_min = *std::min_element(n.begin(), n.end());
      // C * N_y^(-1/4) with C fixed so the rarest class gets the full margin.
      for (std::size_t y = 0; y < k; ++y)
        spec.offsets[y] = -hyper.ldam_max_margin * std::pow(n_min / n[y], 0.25);
      spec.offset_rule = OffsetRule::true_class_only;
      if (hyper.drw_weights) {
        need_counts("ldam with deferred re-weighting");
        if (!(hyper.drw_beta > 0.0 && hyper.drw_beta < 1.0)) {
          throw std::invalid_argument("spec_from_variant: drw beta must lie in (0, 1)");
        }
        for (std::size_t y = 0; y < k; ++y) {
          spec.weights[y] = (1.0 - hyper.drw_beta) /
                            (1.0 - std::pow(hyper.drw_beta, static_cast<double>(class_counts[y])));
        }
      }
      break;
    }
    case LossVariant::la:
    case LossVariant::vs: {
      if (!(hyper.tau > 0.0)) throw std::invalid_argument("spec_from_variant: tau must be positive");
      need_train(variant == LossVariant::la ? "la" : "vs");
      for (std::size_t y = 0; y < k; ++y) spec.offsets[y] = hyper.tau * std::log(pi_train[y]);
      if (variant == LossVariant::vs) {
        if (hyper.gamma < 0.0) throw std::invalid_argument("spec_from_variant: vs gamma must be non-negative");
        const std::vector<double> n = counts_or_prior(class_counts, pi_train);
        const double n_max = *std::max_element(n.begin(), n.end());
        for (std::size_t y = 0; y < k; ++y) spec.scales[y] = std::pow(n[y] / n_max, hyper.gamma);
      }
      break;
    }
    case LossVariant::twce:
      need_train("twce");
      for (std::size_t y = 0; y < k; ++y) {
        if (pi_target[y] <= 0.0) {
          throw std::domain_error("spec_from_variant: twce target prior is zero at class " + std::to_string(y + 1));
        }
        spec.weights[y] = pi_target[y] / pi_train[y];
      }
      break;
    case LossVariant::tla:
      spec.offsets = tla_offsets(pi_train, pi_target, hyper.tau);
      break;
  }
  spec.validate();
  return spec;
}

LossEvaluation evaluate_batch_loss(const GeneralizedLossSpec& spec, const Matrix& logits,
                                   std::span<const ClassIndex> labels, bool with_gradient) {
  if (spec.variant == LossVariant::gml) return gml_batch_loss(logits, labels, with_gradient);

  const std::size_t k = spec.class_count();
  check_batch(k, logits, labels);
  const std::size_t n = logits.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossEvaluation out;
  if (with_gradient) out.gradient = Matrix(n, k);
  std::vector<double> z(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ClassIndex y = labels[i];
    auto f = logits.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const bool offset_applies = spec.offset_rule == OffsetRule::all_classes || c == y;
      z[c] = spec.scales[c] * f[c] + (offset_applies ? spec.offsets[c] : 0.0);
    }
    const double zy = z[y];
    const double lse = softmax_inplace(z);  // z now holds probabilities
    const double log_py = zy - lse;
    const double py = z[y];

    double w = spec.weights[y];
    if (spec.focal()) {
      const double q = 1.0 - py;
      const double per_sample = w * q * q * -log_py;
      total += per_sample;
      if (with_gradient) {
        // d/dz_c of -w (1-p_y)^2 log p_y = w (1-p_y)(d_cy - p_c)(2 p_y log p_y - (1 - p_y))
        const double common = w * q * (2.0 * py * log_py - q) * inv_n;
        auto g = out.gradient.row(i);
        for (std::size_t c = 0; c < k; ++c) {
          const double indicator = c == y ? 1.0 : 0.0;
          g[c] = spec.scales[c] * common * (indicator - z[c]);
        }
      }
    } else {
      total += -w * log_py;
      if (with_gradient) {
        auto g = out.gradient.row(i);
        for (std::size_t c = 0; c < k; ++c) {
          const double indicator = c == y ? 1.0 : 0.0;
          g[c] = w * spec.scales[c] * (z[c] - indicator) * inv_n;
        }
      }
    }
  }
  out.loss = total * inv_n;
  return out;
}

LossEvaluation gml_batch_loss(const Matrix& logits, std::span<const ClassIndex> labels,
                              bool with_gradient) {
  std::vector<std::size_t> counts(logits.cols(), 0);
  for (ClassIndex y : labels) {
    if (y >= counts.size()) throw std::invalid_argument("gml_batch_loss: label out of range");
    ++counts[y];
  }
  return gml_batch_loss(logits, labels, counts, with_gradient);
}

LossEvaluation gml_batch_loss(const Matrix& logits, std::span<const ClassIndex> labels,
                              std::span<const std::size_t> batch_class_counts,
                              bool with_gradient) {
  const std::size_t k = logits.cols();
  check_batch(k, logits, labels);
  if (batch_class_counts.size() != k) throw std::invalid_argument("gml_batch_loss: counts length must equal K");
  std::vector<std::size_t> seen(k, 0);
  for (ClassIndex y : labels) ++seen[y];
  if (!std::equal(seen.begin(), seen.end(), batch_class_counts.begin())) {
    throw std::invalid_argument("gml_batch_loss: counts do not match batch labels");
  }

  // exp(f_y) / sum_y' N_y' exp(f_y') == softmax_y(f + ln N) / N_y, with absent
  // classes dropped from the normalizer.
  std::vector<double> log_counts(k);
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    log_counts[c] = batch_class_counts[c] > 0 ? std::log(static_cast<double>(batch_class_counts[c]))
                                              : -std::numeric_limits<double>::infinity();
    if (batch_class_counts[c] > 0) ++present;
  }

  const std::size_t n = logits.rows();
  Matrix q(n, k);
  std::vector<double> class_mass(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto f = logits.row(i);
    auto qi = q.row(i);
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      qi[c] = batch_class_counts[c] > 0 ? f[c] + log_counts[c] : -std::numeric_limits<double>::infinity();
      zmax = std::max(zmax, qi[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      qi[c] = batch_class_counts[c] > 0 ? std::exp(qi[c] - zmax) : 0.0;
      sum += qi[c];
    }
    for (double& v : qi) v /= sum;
    class_mass[labels[i]] += qi[labels[i]];
  }

  const double inv_present = 1.0 / static_cast<double>(present);
  LossEvaluation out;
  std::vector<double> p_hat(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (batch_class_counts[c] == 0) continue;
    p_hat[c] = class_mass[c] / static_cast<double>(batch_class_counts[c]);
    out.loss -= inv_present * std::log(p_hat[c]);
  }
  if (with_gradient) {
    out.gradient = Matrix(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      const ClassIndex y = labels[i];
      const double scale = -inv_present * q(i, y) /
                           (p_hat[y] * static_cast<double>(batch_class_counts[y]));
      auto g = out.gradient.row(i);
      for (std::size_t c = 0; c < k; ++c) g[c] = scale * ((c == y ? 1.0 : 0.0) - q(i, c));
    }
  }
  return out;
}

}  // namespace tla
