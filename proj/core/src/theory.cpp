#include "tla/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tla/random.hpp"

namespace tla {
namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + ": probability outside [0, 1]");
}

void check_samples(std::size_t n, const char* what) {
  if (n == 0) throw std::invalid_argument(std::string(what) + ": N must be at least 1");
}

void check_error_vector(std::span<const double> v, std::size_t m, const char* what) {
  if (v.size() < 2) throw std::invalid_argument(std::string(what) + ": need K >= 2");
  for (double p : v) check_probability(p, what);
  if (!std::is_sorted(v.begin(), v.end(), std::greater<>())) {
    throw std::invalid_argument(std::string(what) + ": error vector must be sorted descending");
  }
  if (m < 1 || m > v.size()) throw std::invalid_argument(std::string(what) + ": need 1 <= m <= K");
}

double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// Sum over every (m-1)-subset S of rest of prod_{S} leq * prod_{not S} greater.
double subset_sum(std::span<const double> greater, std::span<const double> leq, std::size_t pick) {
  const std::size_t n = greater.size();
  std::vector<std::size_t> idx(pick);
  for (std::size_t i = 0; i < pick; ++i) idx[i] = i;
  double total = 0.0;
  std::vector<bool> in(n);
  while (true) {
    std::fill(in.begin(), in.end(), false);
    for (std::size_t i : idx) in[i] = true;
    double prod = 1.0;
    for (std::size_t j = 0; j < n; ++j) prod *= in[j] ? leq[j] : greater[j];
    total += prod;
    // Next combination in lexicographic order.
    std::size_t i = pick;
    while (i > 0 && idx[i - 1] == n - pick + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < pick; ++j) idx[j] = idx[j - 1] + 1;
  }
  return total;
}

}  // namespace

double log_binomial_pmf(std::size_t n, std::size_t trials, double p) {
  check_probability(p, "log_binomial_pmf");
  if (n > trials) return -std::numeric_limits<double>::infinity();
  if (p == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p == 1.0) return n == trials ? 0.0 : -std::numeric_limits<double>::infinity();
  return log_choose(trials, n) + static_cast<double>(n) * std::log(p) +
         static_cast<double>(trials - n) * std::log1p(-p);
}

double binomial_pmf(std::size_t n, std::size_t trials, double p) {
  return std::exp(log_binomial_pmf(n, trials, p));
}

double prob_greater(double p_y, double p_other, std::size_t samples) {
  check_probability(p_y, "prob_greater");
  check_probability(p_other, "prob_greater");
  check_samples(samples, "prob_greater");
  const std::size_t n_total = samples;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 <= n_total; ++i) {
    const double other = binomial_pmf(i, n_total, p_other);
    if (other == 0.0) continue;
    double inner = 0.0;
    for (std::size_t n = 1; n <= n_total - i; ++n) inner += binomial_pmf(i + n, n_total, p_y);
    total += inner * other;
  }
  return std::clamp(total, 0.0, 1.0);
}

double prob_leq(double p_y, double p_other, std::size_t samples) {
  check_probability(p_y, "prob_leq");
  check_probability(p_other, "prob_leq");
  check_samples(samples, "prob_leq");
  const std::size_t n_total = samples;
  double total = 0.0;
  for (std::size_t i = 0; i <= n_total; ++i) {
    const double own = binomial_pmf(i, n_total, p_y);
    if (own == 0.0) continue;
    double inner = 0.0;
    for (std::size_t n = 0; n <= n_total - i; ++n) inner += binomial_pmf(i + n, n_total, p_other);
    total += own * inner;
  }
  return std::clamp(total, 0.0, 1.0);
}

double prob_mth_worst(std::span<const double> error_vector, std::size_t m, std::size_t samples,
                      const MthWorstOptions& options) {
  check_error_vector(error_vector, m, "prob_mth_worst");
  check_samples(samples, "prob_mth_worst");
  const std::size_t rest = error_vector.size() - 1;
  std::vector<double> greater(rest);
  std::vector<double> leq(rest);
  for (std::size_t j = 0; j < rest; ++j) {
    greater[j] = prob_greater(error_vector[0], error_vector[j + 1], samples);
    leq[j] = prob_leq(error_vector[0], error_vector[j + 1], samples);
  }
  const std::size_t pick = m - 1;
  if (std::exp(log_choose(rest, pick)) <= kMaxExactTerms) {
    return std::clamp(subset_sum(greater, leq, pick), 0.0, 1.0);
  }
  // Sampled form: draw each pairwise event independently and count how
  // often exactly m - 1 classes beat the worst one.
  Rng rng(derive_seed(options.fallback_seed, m));
  std::size_t hits = 0;
  for (std::size_t t = 0; t < options.fallback_trials; ++t) {
    std::size_t beaten_by = 0;
    for (std::size_t j = 0; j < rest; ++j)
      if (unit_uniform(rng) < leq[j]) ++beaten_by;
    if (beaten_by == pick) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(options.fallback_trials);
}

double prob_find_worst(std::span<const double> error_vector, std::size_t m, std::size_t samples,
                       const MthWorstOptions& options) {
  check_error_vector(error_vector, m, "prob_find_worst");
  double total = 0.0;
  for (std::size_t i = 1; i <= m; ++i) total += prob_mth_worst(error_vector, i, samples, options);
  return std::clamp(total, 0.0, 1.0);
}

double ega_estimate_mse(double p, std::size_t samples, MseSumStart start) {
  check_probability(p, "ega_estimate_mse");
  check_samples(samples, "ega_estimate_mse");
  const double target = std::exp(p);
  double total = 0.0;
  for (std::size_t n = start == MseSumStart::from_zero ? 0 : 1; n <= samples; ++n) {
    const double diff = target - std::exp(static_cast<double>(n) / static_cast<double>(samples));
    total += binomial_pmf(n, samples, p) * diff * diff;
  }
  return total;
}

BoundTerms bound_terms(const GeneralizedLossSpec& spec, const ModelParams& params,
                       const LabeledDataset& dataset, const Prior& pi_train, const Prior& pi) {
  spec.validate();
  const std::size_t k = spec.class_count();
  if (dataset.class_count() != k || params.class_count != k || pi_train.size() != k || pi.size() != k) {
    throw std::invalid_argument("bound_terms: class count mismatch");
  }
  const Matrix logits = forward_logits(params, dataset.instances());
  const auto labels = dataset.labels();

  BoundTerms out;
  double delta_sum = 0.0;
  for (double s : spec.scales) delta_sum += s;
  for (std::size_t y = 0; y < k; ++y) {
    std::size_t best = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == y && (best == labels.size() || logits(i, y) < logits(best, y))) best = i;
    }
    if (best == labels.size()) {
      throw std::invalid_argument("bound_terms: class " + std::to_string(y + 1) + " has no samples");
    }
    const double others = delta_sum - spec.scales[y];
    const double delta_bar = std::sqrt(spec.scales[y] * spec.scales[y] + others * others);

    auto row = logits.row(best);
    std::vector<double> z(k);
    for (std::size_t c = 0; c < k; ++c) {
      const bool offset_here = spec.offset_rule == OffsetRule::all_classes || c == y;
      z[c] = spec.scales[c] * row[c] + (offset_here ? spec.offsets[c] : 0.0);
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double psi = std::clamp(1.0 - std::exp(z[y] - zmax) / denom, 0.0, 1.0);
    const double root = std::sqrt(pi_train[y]);

    out.delta_bar.push_back(delta_bar);
    out.min_logit.push_back(row[y]);
    out.psi.push_back(psi);
    out.summand.push_back(spec.weights[y] * delta_bar * root * psi);
    out.tla_factor.push_back(root * psi);
    out.twce_factor.push_back(root > 0.0 ? pi[y] / root * psi : std::numeric_limits<double>::infinity());
  }
  return out;
}

}  // namespace tla
