#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace tla {

inline constexpr std::size_t kMinMcTrials = 10000;
inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

struct FailureEstimate {
  double failure = 0.0;
  double std_error = 0.0;
  Interval ci;
  std::size_t trials = 0;
};

struct MseEstimate {
  double mse = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

// Each trial draws N Bernoulli(P_y) outcomes per class and selects the M
// classes with the largest empirical error, ties broken uniformly at random.
// Counts how often the true worst class (largest P, smallest index on ties)
// is left out. Trial t uses the stream derive_seed(master_seed, t), so the
// result does not depend on threads.
FailureEstimate mc_worst_class_failure(std::span<const double> error_vector, std::size_t m,
                                       std::size_t samples, std::size_t trials,
                                       std::uint64_t master_seed, unsigned threads = 1);

// Mean of (exp(P) - exp(P^))^2 over trials.
MseEstimate mc_ega_mse(double p, std::size_t samples, std::size_t trials, std::uint64_t master_seed,
                       unsigned threads = 1);

// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

}  // namespace tla
