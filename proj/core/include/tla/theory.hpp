#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tla/data.hpp"
#include "tla/losses.hpp"
#include "tla/model.hpp"
#include "tla/prior.hpp"

namespace tla {

// ln Bin(n; N, P) via lgamma. Returns -inf for impossible outcomes.
double log_binomial_pmf(std::size_t n, std::size_t trials, double p);
double binomial_pmf(std::size_t n, std::size_t trials, double p);

// Pr[P^_y > P^_y'] and Pr[P^_y <= P^_y'] for independent N-sample estimates.
// The two are coded as separate sums and are complementary.
double prob_greater(double p_y, double p_other, std::size_t samples);
double prob_leq(double p_y, double p_other, std::size_t samples);

// Largest number of subset products prob_mth_worst enumerates exactly.
inline constexpr double kMaxExactTerms = 1e6;

struct MthWorstOptions {
  std::size_t fallback_trials = 200000;
  std::uint64_t fallback_seed = 0;
};

// Probability that the worst class (index 0) ranks m-th: exactly m - 1 other
// classes beat it while it beats the rest. The product form treats the
// pairwise events as independent and uses the adversarial tie rule, so
// summing over m gives one. error_vector must be sorted descending.
// Beyond kMaxExactTerms subsets the sum is estimated by sampling the
// pairwise events.
double prob_mth_worst(std::span<const double> error_vector, std::size_t m, std::size_t samples,
                      const MthWorstOptions& options = {});

// Lower bound on the chance that the worst class is among the M selected.
double prob_find_worst(std::span<const double> error_vector, std::size_t m, std::size_t samples,
                       const MthWorstOptions& options = {});

enum class MseSumStart { from_zero, from_one };

// E[(exp(P) - exp(P^))^2] for P^ the mean of N Bernoulli(P) draws.
double ega_estimate_mse(double p, std::size_t samples, MseSumStart start = MseSumStart::from_zero);

struct BoundTerms {
  std::vector<double> delta_bar;   // sqrt(Delta_y^2 + (sum_{y' != y} Delta_y')^2)
  std::vector<double> min_logit;   // S_y
  std::vector<double> psi;         // 1 - softmax_y at the minimizing sample
  std::vector<double> summand;     // w_y * delta_bar_y * sqrt(pi_train_y) * psi_y
  std::vector<double> tla_factor;  // sqrt(pi_train_y) * psi_y
  std::vector<double> twce_factor; // pi_y / sqrt(pi_train_y) * psi_y
};

// Complexity-free per-class pieces of the prior-dependent generalization
// bound, evaluated for a trained model.
BoundTerms bound_terms(const GeneralizedLossSpec& spec, const ModelParams& params,
                       const LabeledDataset& dataset, const Prior& pi_train, const Prior& pi);

}  // namespace tla
