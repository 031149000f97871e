#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tla/theory.hpp"

namespace tla {
namespace {

const std::vector<double> kBenchmarkErrors{0.96, 0.89, 0.86, 0.75, 0.67, 0.06, 0.05, 0.03, 0.03, 0.02};

// Exactly m - 1 of the independent events "class j does not fall below the
// worst class" occur: a Poisson-binomial mass by dynamic programming.
double poisson_binomial_oracle(std::span<const double> p, std::size_t m, std::size_t n) {
  std::vector<double> dist{1.0};
  for (std::size_t j = 1; j < p.size(); ++j) {
    const double q = prob_leq(p[0], p[j], n);
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t c = 0; c < dist.size(); ++c) {
      next[c] += dist[c] * (1.0 - q);
      next[c + 1] += dist[c] * q;
    }
    dist = std::move(next);
  }
  return dist[m - 1];
}

TEST(Binomial, MassSumsToOne) {
  for (std::size_t n : {1u, 7u, 100u, 10000u}) {
    for (double p : {0.0, 0.013, 0.5, 0.97, 1.0}) {
      double s = 0.0;
      for (std::size_t k = 0; k <= n; ++k) s += binomial_pmf(k, n, p);
      EXPECT_NEAR(s, 1.0, 1e-10) << n << " " << p;
    }
  }
  EXPECT_EQ(binomial_pmf(3, 2, 0.5), 0.0);
  EXPECT_NEAR(binomial_pmf(2, 4, 0.5), 0.375, 1e-15);
}

TEST(PairwiseProbabilities, Examples) {
  for (std::size_t n : {1u, 5u, 40u}) {
    EXPECT_NEAR(prob_greater(1.0, 0.0, n), 1.0, 1e-15);
    EXPECT_EQ(prob_greater(0.0, 0.0, n), 0.0);
  }
  EXPECT_NEAR(prob_greater(0.8, 0.5, 1), 0.4, 1e-15);
  EXPECT_NEAR(prob_leq(0.8, 0.5, 1), 0.6, 1e-15);
  EXPECT_THROW(prob_greater(1.2, 0.5, 3), std::invalid_argument);
  EXPECT_THROW(prob_leq(0.2, 0.5, 0), std::invalid_argument);
}

TEST(PairwiseProbabilities, Complementary) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> n(1, 200);
  for (int t = 0; t < 100; ++t) {
    const double a = u(rng), b = u(rng);
    const std::size_t samples = n(rng);
    EXPECT_NEAR(prob_greater(a, b, samples) + prob_leq(a, b, samples), 1.0, 1e-10);
  }
}

TEST(MthWorst, Examples) {
  const std::vector<double> two{0.8, 0.5};
  EXPECT_NEAR(prob_mth_worst(two, 1, 1), 0.4, 1e-15);
  EXPECT_NEAR(prob_mth_worst(two, 2, 1), 0.6, 1e-15);
  EXPECT_NEAR(prob_find_worst(two, 1, 1), 0.4, 1e-15);

  const std::vector<double> four{0.6, 0.5, 0.3, 0.1};
  double product = 1.0;
  for (std::size_t j = 1; j < 4; ++j) product *= prob_greater(0.6, four[j], 6);
  EXPECT_NEAR(prob_mth_worst(four, 1, 6), product, 1e-14);
}

TEST(MthWorst, ThreeClassHighPrecisionValues) {
  const std::vector<double> p{0.7, 0.4, 0.2};
  EXPECT_NEAR(prob_mth_worst(p, 1, 2), 0.41602176, 1e-12);
  EXPECT_NEAR(prob_mth_worst(p, 2, 2), 0.46995648, 1e-12);
  EXPECT_NEAR(prob_mth_worst(p, 3, 2), 0.11402176, 1e-12);
}

TEST(MthWorst, MatchesPoissonBinomialOracle) {
  for (std::size_t n : {2u, 16u, 64u}) {
    double total = 0.0;
    for (std::size_t m = 1; m <= kBenchmarkErrors.size(); ++m) {
      const double v = prob_mth_worst(kBenchmarkErrors, m, n);
      EXPECT_NEAR(v, poisson_binomial_oracle(kBenchmarkErrors, m, n), 1e-12) << "m=" << m << " N=" << n;
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_LE(total, 1.0 + 1e-12);
  }
}

TEST(MthWorst, SamplingFallbackBeyondGuard) {
  std::vector<double> p(30);
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = 0.6 - 0.01 * static_cast<double>(j);
  // C(29, 7) is above the exact-enumeration limit.
  const double v = prob_mth_worst(p, 8, 10);
  EXPECT_NEAR(v, poisson_binomial_oracle(p, 8, 10), 5e-3);
}

TEST(MthWorst, Validation) {
  const std::vector<double> unsorted{0.2, 0.5};
  EXPECT_THROW(prob_mth_worst(unsorted, 1, 3), std::invalid_argument);
  const std::vector<double> ok{0.5, 0.2};
  EXPECT_THROW(prob_mth_worst(ok, 0, 3), std::invalid_argument);
  EXPECT_THROW(prob_mth_worst(ok, 3, 3), std::invalid_argument);
}

TEST(FindWorst, BenchmarkVectorAndMonotonicity) {
  EXPECT_GT(prob_find_worst(kBenchmarkErrors, 3, 16), 0.99);
  for (std::size_t n : {2u, 8u, 32u}) {
    double previous = 0.0;
    for (std::size_t m = 1; m <= kBenchmarkErrors.size(); ++m) {
      const double v = prob_find_worst(kBenchmarkErrors, m, n);
      EXPECT_GE(v, previous - 1e-15);
      EXPECT_LE(v, 1.0 + 1e-12);
      previous = v;
    }
  }
}

TEST(EgaMse, Examples) {
  for (std::size_t n : {1u, 9u}) {
    EXPECT_EQ(ega_estimate_mse(0.0, n), 0.0);
    EXPECT_EQ(ega_estimate_mse(1.0, n), 0.0);
  }
  // Two-term enumeration at 40 digits.
  EXPECT_NEAR(ega_estimate_mse(0.5, 1), 0.78239953688617738, 1e-15);
  EXPECT_NEAR(ega_estimate_mse(0.5, 1, MseSumStart::from_one), 0.57197989335678291, 1e-15);
  EXPECT_THROW(ega_estimate_mse(-0.5, 3), std::invalid_argument);
}

TEST(EgaMse, DecreasesWithSampleSize) {
  double previous = ega_estimate_mse(0.5, 1);
  for (std::size_t k = 1; k <= 10; ++k) {
    const double v = ega_estimate_mse(0.5, std::size_t{1} << k);
    EXPECT_LT(v, previous);
    previous = v;
  }
}

TEST(BoundTerms, UnitScalesAndPsiRange) {
  const std::vector<std::size_t> counts{30, 10};
  const LabeledDataset data = sample_mixture(MixtureSpec::two_class_line(), counts, 1);
  const Prior train = data.empirical_prior();
  const ModelParams params = ModelParams::initialize(Architecture::linear(), 1, 2, 2);
  const Prior target({0.3, 0.7});
  const auto tla = spec_from_variant(LossVariant::tla, train, target, {}, {});
  const BoundTerms t = bound_terms(tla, params, data, train, target);
  for (std::size_t y = 0; y < 2; ++y) {
    EXPECT_NEAR(t.delta_bar[y], std::sqrt(2.0), 1e-15);
    EXPECT_GE(t.psi[y], 0.0);
    EXPECT_LE(t.psi[y], 1.0);
    EXPECT_NEAR(t.tla_factor[y], std::sqrt(train[y]) * t.psi[y], 1e-15);
    EXPECT_NEAR(t.twce_factor[y], target[y] / std::sqrt(train[y]) * t.psi[y], 1e-15);
  }
  const Matrix logits = forward_logits(params, data.instances());
  double s1 = 1e300;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels()[i] == 1) s1 = std::min(s1, logits(i, 1));
  EXPECT_EQ(t.min_logit[1], s1);
}

}  // namespace
}  // namespace tla
