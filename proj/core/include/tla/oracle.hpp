#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tla/ascent.hpp"
#include "tla/data.hpp"
#include "tla/prior.hpp"

namespace tla {

// Bayes rule argmax_y [ln pi_y + ln N(x; mu_y, Sigma_y)] for a fixed prior.
// Factorizes the covariances once.
class BayesClassifier {
 public:
  BayesClassifier(const MixtureSpec& spec, const Prior& pi);
  // Smallest index on ties. Classes with pi_y = 0 are never predicted.
  ClassIndex predict(std::span<const double> x) const;
  std::vector<ClassIndex> predict(const Matrix& instances) const;
  double log_joint(std::span<const double> x, ClassIndex y) const;

 private:
  std::size_t dim_;
  std::vector<std::vector<double>> means_;
  std::vector<Matrix> chol_;  // lower Cholesky factors
  std::vector<double> log_norm_;
  std::vector<double> log_prior_;
};

ClassIndex bayes_predict(const MixtureSpec& spec, const Prior& pi, std::span<const double> x);

inline constexpr std::size_t kDefaultOracleSamples = 100000;
inline constexpr std::size_t kMinOracleSamples = 10000;

struct BayesRisks {
  ClassRisks risks;
  std::vector<double> std_errors;  // zero when exact
  bool exact = false;
};

// True when d = 1 and all variances agree, where class risks have a closed
// form for any K.
bool has_exact_risks(const MixtureSpec& spec);

// Exact when has_exact_risks, otherwise a Monte Carlo estimate with
// mc_samples draws per class. Class y draws from stream derive_seed(seed, y),
// so repeated calls with one seed share their random numbers.
BayesRisks bayes_class_risks(const MixtureSpec& spec, const Prior& pi,
                             std::size_t mc_samples = kDefaultOracleSamples, std::uint64_t seed = 0);

// R(pi) = sum_y pi_y P^(e)_y under the Bayes rule for pi.
double bayes_total_risk(const MixtureSpec& spec, const Prior& pi,
                        std::size_t mc_samples = kDefaultOracleSamples, std::uint64_t seed = 0);

// Euclidean projection onto the probability simplex.
Prior project_to_simplex(std::span<const double> v);

enum class SearchStrategy { automatic, grid, supergradient };

struct AdversarialSearchConfig {
  SearchStrategy strategy = SearchStrategy::automatic;  // grid for K <= 3
  double resolution = 1e-3;
  std::size_t iterations = 2000;
  double step_scale = 0.1;   // eta_t = step_scale / sqrt(t)
  double tolerance = 1e-4;
  std::size_t mc_samples = kDefaultOracleSamples;
  std::uint64_t seed = 0;
};

struct AdversarialResult {
  Prior prior;
  double risk = 0.0;
  bool converged = true;  // false when supergradient ascent hit its cap still moving
  std::size_t evaluations = 0;
};

// Maximizes the concave R(pi) over the simplex.
AdversarialResult adversarial_prior_search(const MixtureSpec& spec, const AdversarialSearchConfig& config = {});

}  // namespace tla
