#include "tla/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tla/random.hpp"

namespace tla {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Pr[lo < Z < hi] for standard normal Z, using the tail that keeps precision.
double normal_mass(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  const auto upper_tail = [](double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); };
  if (lo >= 0.0) return upper_tail(lo) - upper_tail(hi);
  return upper_tail(-hi) - upper_tail(-lo);
}

struct Line {
  double slope;
  double intercept;
};

BayesRisks exact_risks_1d(const MixtureSpec& spec, const Prior& pi) {
  const std::size_t k = spec.class_count();
  const double var = spec.covariances[0](0, 0);
  const double sigma = std::sqrt(var);
  // ln pi_y + ln N(x; mu_y, var) minus terms shared by all classes.
  std::vector<Line> lines(k);
  std::vector<bool> active(k);
  for (std::size_t y = 0; y < k; ++y) {
    const double mu = spec.means[y][0];
    active[y] = pi[y] > 0.0;
    lines[y] = {mu / var, active[y] ? std::log(pi[y]) - mu * mu / (2.0 * var) : kNegInf};
  }
  const auto winner = [&](double x) {
    std::size_t best = k;
    double best_v = kNegInf;
    for (std::size_t y = 0; y < k; ++y) {
      if (!active[y]) continue;
      const double v = lines[y].slope * x + lines[y].intercept;
      if (best == k || v > best_v) {
        best = y;
        best_v = v;
      }
    }
    return best;
  };

  std::vector<double> cuts;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (!active[i] || !active[j] || lines[i].slope == lines[j].slope) continue;
      cuts.push_back((lines[j].intercept - lines[i].intercept) / (lines[i].slope - lines[j].slope));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Intervals (-inf, c_0], (c_0, c_1], ..., (c_last, inf), each with one winner.
  struct Piece {
    double lo, hi;
    std::size_t cls;
  };
  std::vector<Piece> pieces;
  const double inf = std::numeric_limits<double>::infinity();
  if (cuts.empty()) {
    pieces.push_back({-inf, inf, winner(0.0)});
  } else {
    pieces.push_back({-inf, cuts.front(), winner(cuts.front() - 1.0)});
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      pieces.push_back({cuts[i], cuts[i + 1], winner(0.5 * (cuts[i] + cuts[i + 1]))});
    }
    pieces.push_back({cuts.back(), inf, winner(cuts.back() + 1.0)});
  }

  BayesRisks out;
  out.exact = true;
  out.risks.estimates.assign(k, 0.0);
  out.risks.counts.assign(k, 0);
  out.std_errors.assign(k, 0.0);
  for (std::size_t y = 0; y < k; ++y) {
    const double mu = spec.means[y][0];
    double err = 0.0;
    for (const Piece& p : pieces) {
      if (p.cls != y) err += normal_mass((p.lo - mu) / sigma, (p.hi - mu) / sigma);
    }
    out.risks.estimates[y] = std::clamp(err, 0.0, 1.0);
  }
  return out;
}

}  // namespace

BayesClassifier::BayesClassifier(const MixtureSpec& spec, const Prior& pi) : dim_(spec.dim()) {
  spec.validate();
  const std::size_t k = spec.class_count();
  if (pi.size() != k) throw std::invalid_argument("BayesClassifier: prior length differs from K");
  means_ = spec.means;
  for (std::size_t y = 0; y < k; ++y) {
    const Matrix& c = spec.covariances[y];
    Eigen::MatrixXd cov(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) cov(i, j) = c(i, j);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw std::domain_error("BayesClassifier: degenerate covariance");
    Eigen::MatrixXd l = llt.matrixL();
    Matrix lower(dim_, dim_);
    double log_det = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      log_det += 2.0 * std::log(l(i, i));
      for (std::size_t j = 0; j <= i; ++j) lower(i, j) = l(i, j);
    }
    chol_.push_back(std::move(lower));
    log_norm_.push_back(-0.5 * log_det - 0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi));
    log_prior_.push_back(pi[y] > 0.0 ? std::log(pi[y]) : kNegInf);
  }
}

double BayesClassifier::log_joint(std::span<const double> x, ClassIndex y) const {
  if (x.size() != dim_) throw std::invalid_argument("BayesClassifier: input dimension mismatch");
  if (log_prior_.at(y) == kNegInf) return kNegInf;
  // Solve L z = x - mu by forward substitution; the quadratic form is |z|^2.
  const Matrix& l = chol_[y];
  std::vector<double> z(dim_);
  double quad = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = x[i] - means_[y][i];
    for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * z[j];
    z[i] = s / l(i, i);
    quad += z[i] * z[i];
  }
  return log_prior_[y] + log_norm_[y] - 0.5 * quad;
}

ClassIndex BayesClassifier::predict(std::span<const double> x) const {
  ClassIndex best = 0;
  double best_v = kNegInf;
  bool found = false;
  for (ClassIndex y = 0; y < log_prior_.size(); ++y) {
    if (log_prior_[y] == kNegInf) continue;
    const double v = log_joint(x, y);
    if (!found || v > best_v) {
      best = y;
      best_v = v;
      found = true;
    }
  }
  return best;
}

std::vector<ClassIndex> BayesClassifier::predict(const Matrix& instances) const {
  std::vector<ClassIndex> out(instances.rows());
  for (std::size_t i = 0; i < instances.rows(); ++i) out[i] = predict(instances.row(i));
  return out;
}

ClassIndex bayes_predict(const MixtureSpec& spec, const Prior& pi, std::span<const double> x) {
  return BayesClassifier(spec, pi).predict(x);
}

bool has_exact_risks(const MixtureSpec& spec) {
  if (spec.dim() != 1) return false;
  const double v = spec.covariances.front()(0, 0);
  return std::all_of(spec.covariances.begin(), spec.covariances.end(),
                     [v](const Matrix& c) { return c(0, 0) == v; });
}

BayesRisks bayes_class_risks(const MixtureSpec& spec, const Prior& pi, std::size_t mc_samples,
                             std::uint64_t seed) {
  spec.validate();
  if (pi.size() != spec.class_count()) throw std::invalid_argument("bayes_class_risks: prior length differs from K");
  if (has_exact_risks(spec)) return exact_risks_1d(spec, pi);
  if (mc_samples < kMinOracleSamples) {
    throw std::invalid_argument("bayes_class_risks: need at least " + std::to_string(kMinOracleSamples) +
                                " samples per class without a closed form");
  }
  const BayesClassifier rule(spec, pi);
  const std::size_t k = spec.class_count();
  BayesRisks out;
  out.risks.estimates.assign(k, 0.0);
  out.risks.counts.assign(k, mc_samples);
  out.std_errors.assign(k, 0.0);
  for (std::size_t y = 0; y < k; ++y) {
    std::vector<std::size_t> counts(k, 0);
    counts[y] = mc_samples;
    const LabeledDataset draws = sample_mixture(spec, counts, seed);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < draws.size(); ++i)
      if (rule.predict(draws.instances().row(i)) != y) ++errors;
    const double p = static_cast<double>(errors) / static_cast<double>(mc_samples);
    out.risks.estimates[y] = p;
    out.std_errors[y] = std::sqrt(p * (1.0 - p) / static_cast<double>(mc_samples));
  }
  return out;
}

double bayes_total_risk(const MixtureSpec& spec, const Prior& pi, std::size_t mc_samples, std::uint64_t seed) {
  const BayesRisks r = bayes_class_risks(spec, pi, mc_samples, seed);
  double total = 0.0;
  for (std::size_t y = 0; y < pi.size(); ++y) total += pi[y] * r.risks.estimates[y];
  return std::clamp(total, 0.0, 1.0);
}

Prior project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("project_to_simplex: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("project_to_simplex: non-finite entry");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
  return Prior::normalized(std::move(out));
}

AdversarialResult adversarial_prior_search(const MixtureSpec& spec, const AdversarialSearchConfig& config) {
  spec.validate();
  const std::size_t k = spec.class_count();
  SearchStrategy strategy = config.strategy;
  if (strategy == SearchStrategy::automatic) strategy = k <= 3 ? SearchStrategy::grid : SearchStrategy::supergradient;

  if (strategy == SearchStrategy::grid) {
    if (k > 3) throw std::invalid_argument("adversarial_prior_search: grid search needs K <= 3");
    if (!(config.resolution > 0.0 && config.resolution <= 0.5)) {
      throw std::invalid_argument("adversarial_prior_search: resolution must lie in (0, 0.5]");
    }
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / config.resolution));
    AdversarialResult best{Prior::uniform(k), -1.0, true, 0};
    const auto consider = [&](std::vector<double> p) {
      Prior pi = Prior::normalized(std::move(p));
      const double r = bayes_total_risk(spec, pi, config.mc_samples, config.seed);
      ++best.evaluations;
      if (r > best.risk) {
        best.risk = r;
        best.prior = std::move(pi);
      }
    };
    const double n = static_cast<double>(steps);
    for (std::size_t i = 0; i <= steps; ++i) {
      if (k == 2) {
        consider({static_cast<double>(i) / n, static_cast<double>(steps - i) / n});
        continue;
      }
      for (std::size_t j = 0; i + j <= steps; ++j) {
        consider({static_cast<double>(i) / n, static_cast<double>(j) / n, static_cast<double>(steps - i - j) / n});
      }
    }
    return best;
  }

  if (config.iterations == 0) throw std::invalid_argument("adversarial_prior_search: iterations must be positive");
  Prior pi = Prior::uniform(k);
  AdversarialResult best{pi, -1.0, false, 0};
  double last = 0.0;
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    const BayesRisks r = bayes_class_risks(spec, pi, config.mc_samples, config.seed);
    ++best.evaluations;
    double value = 0.0;
    for (std::size_t y = 0; y < k; ++y) value += pi[y] * r.risks.estimates[y];
    last = value;
    if (value > best.risk) {
      best.risk = value;
      best.prior = pi;
    }
    const double eta = config.step_scale / std::sqrt(static_cast<double>(t));
    std::vector<double> next(k);
    for (std::size_t y = 0; y < k; ++y) next[y] = pi[y] + eta * r.risks.estimates[y];
    pi = project_to_simplex(next);
  }
  best.converged = std::abs(best.risk - last) <= config.tolerance;
  return best;
}

}  // namespace tla
