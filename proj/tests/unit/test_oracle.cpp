#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tla/oracle.hpp"

namespace tla {
namespace {

// 1 - Phi(1) at 40 digits.
constexpr double kTailAtOne = 0.15865525393145705;

double total_risk_se(const BayesRisks& r, const Prior& pi) {
  double v = 0.0;
  for (std::size_t y = 0; y < pi.size(); ++y) v += pi[y] * pi[y] * r.std_errors[y] * r.std_errors[y];
  return std::sqrt(v);
}

TEST(BayesPredict, Examples) {
  const MixtureSpec spec = MixtureSpec::two_class_line();
  const std::vector<double> x03{0.3}, x05{0.5}, x07{0.7};
  EXPECT_EQ(bayes_predict(spec, Prior::uniform(2), x03), 1u);
  EXPECT_EQ(bayes_predict(spec, Prior({0.8, 0.2}), x05), 0u);
  EXPECT_EQ(bayes_predict(spec, Prior({0.8, 0.2}), x07), 1u);
  const std::vector<double> far{-50.0};
  EXPECT_EQ(bayes_predict(spec, Prior::one_hot(2, 1), far), 1u);
}

TEST(BayesPredict, PriorScaleInvariance) {
  const MixtureSpec spec = MixtureSpec::circle(4, 1.5);
  const Prior a = Prior::normalized({1.0, 2.0, 3.0, 4.0});
  const Prior b = Prior::normalized({2.5, 5.0, 7.5, 10.0});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{n(rng), n(rng)};
    EXPECT_EQ(bayes_predict(spec, a, x), bayes_predict(spec, b, x));
  }
}

TEST(BayesRisks, SymmetricTwoClass) {
  const MixtureSpec spec = MixtureSpec::two_class_line();
  ASSERT_TRUE(has_exact_risks(spec));
  const BayesRisks r = bayes_class_risks(spec, Prior::uniform(2));
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.risks.estimates[0], kTailAtOne, 1e-15);
  EXPECT_NEAR(r.risks.estimates[1], kTailAtOne, 1e-15);
  EXPECT_NEAR(bayes_total_risk(spec, Prior::uniform(2)), kTailAtOne, 1e-15);
}

TEST(BayesRisks, SkewedTwoClassClosedForm) {
  // Threshold 0.5 ln 4; risks are Gaussian tails around it, evaluated at 40 digits.
  const BayesRisks r = bayes_class_risks(MixtureSpec::two_class_line(), Prior({0.8, 0.2}));
  EXPECT_NEAR(r.risks.estimates[0], 0.045213727790224140, 1e-14);
  EXPECT_NEAR(r.risks.estimates[1], 0.37947770112008491, 1e-14);
}

TEST(BayesRisks, OneHotPrior) {
  for (const MixtureSpec& spec : {MixtureSpec::two_class_line(), MixtureSpec::circle(3)}) {
    const BayesRisks r = bayes_class_risks(spec, Prior::one_hot(spec.class_count(), 1), kMinOracleSamples, 3);
    EXPECT_EQ(r.risks.estimates[1], 0.0);
    EXPECT_EQ(bayes_total_risk(spec, Prior::one_hot(spec.class_count(), 1), kMinOracleSamples, 3), 0.0);
  }
}

TEST(BayesRisks, MonteCarloMatchesExactThroughEmbedding) {
  // The same problem in two dimensions has no closed-form path, so it runs by sampling.
  MixtureSpec plane;
  plane.means = {{-1.0, 0.0}, {1.0, 0.0}};
  plane.covariances = {Matrix(2, 2, std::vector<double>{1, 0, 0, 1}), Matrix(2, 2, std::vector<double>{1, 0, 0, 1})};
  ASSERT_FALSE(has_exact_risks(plane));
  for (const Prior& pi : {Prior::uniform(2), Prior({0.8, 0.2}), Prior({0.1, 0.9})}) {
    const BayesRisks exact = bayes_class_risks(MixtureSpec::two_class_line(), pi);
    const BayesRisks mc = bayes_class_risks(plane, pi, 100000, 5);
    EXPECT_FALSE(mc.exact);
    for (std::size_t y = 0; y < 2; ++y) {
      EXPECT_GT(mc.std_errors[y], 0.0);
      EXPECT_NEAR(mc.risks.estimates[y], exact.risks.estimates[y], 4.0 * mc.std_errors[y]);
    }
  }
  EXPECT_THROW(bayes_class_risks(plane, Prior::uniform(2), 100), std::invalid_argument);
}

TEST(BayesRisks, TotalRiskBelowWorstClassRisk) {
  const MixtureSpec spec = MixtureSpec::line({-2.0, 0.0, 1.5});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Prior pi = Prior::normalized({u(rng), u(rng), u(rng)});
    const BayesRisks r = bayes_class_risks(spec, pi);
    const double total = bayes_total_risk(spec, pi);
    EXPECT_LE(total, *std::max_element(r.risks.estimates.begin(), r.risks.estimates.end()) + 1e-15);
    EXPECT_GE(total, 0.0);
  }
}

TEST(BayesRisks, ConcaveAlongRandomChords) {
  const MixtureSpec spec = MixtureSpec::circle(3, 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Prior a = Prior::normalized({u(rng), u(rng), u(rng)});
    const Prior b = Prior::normalized({u(rng), u(rng), u(rng)});
    const Prior mid = Prior::normalized({a[0] + b[0], a[1] + b[1], a[2] + b[2]});
    const BayesRisks ra = bayes_class_risks(spec, a, kMinOracleSamples, 7);
    const BayesRisks rb = bayes_class_risks(spec, b, kMinOracleSamples, 7);
    const BayesRisks rm = bayes_class_risks(spec, mid, kMinOracleSamples, 7);
    const auto total = [](const BayesRisks& r, const Prior& p) {
      double s = 0.0;
      for (std::size_t y = 0; y < 3; ++y) s += p[y] * r.risks.estimates[y];
      return s;
    };
    const double se = total_risk_se(ra, a) + total_risk_se(rb, b) + total_risk_se(rm, mid);
    EXPECT_GE(total(rm, mid), 0.5 * (total(ra, a) + total(rb, b)) - 3.0 * se) << "pair " << i;
  }
}

TEST(AdversarialSearch, SymmetricTwoClass) {
  const AdversarialResult r = adversarial_prior_search(MixtureSpec::two_class_line());
  EXPECT_NEAR(r.prior[0], 0.5, 1e-3);
  EXPECT_NEAR(r.risk, kTailAtOne, 1e-6);
  EXPECT_TRUE(r.converged);
}

TEST(AdversarialSearch, EqualizerOnThreeClassLine) {
  const MixtureSpec spec = MixtureSpec::line({-2.0, 0.0, 1.5});
  const AdversarialResult r = adversarial_prior_search(spec);
  for (std::size_t y = 0; y < 3; ++y) EXPECT_GT(r.prior[y], 0.0);
  const BayesRisks risks = bayes_class_risks(spec, r.prior);
  const auto [lo, hi] = std::minmax_element(risks.risks.estimates.begin(), risks.risks.estimates.end());
  EXPECT_LT(*hi - *lo, 1e-2);
  EXPECT_GE(r.risk, bayes_total_risk(spec, Prior({0.7, 0.2, 0.1})));
  EXPECT_GE(r.risk, bayes_total_risk(spec, Prior::uniform(3)));
}

TEST(AdversarialSearch, SupergradientAgreesWithGrid) {
  const MixtureSpec spec = MixtureSpec::line({-2.0, 0.0, 1.5});
  AdversarialSearchConfig grid;
  grid.strategy = SearchStrategy::grid;
  AdversarialSearchConfig ascent;
  ascent.strategy = SearchStrategy::supergradient;
  ascent.iterations = 5000;
  const AdversarialResult g = adversarial_prior_search(spec, grid);
  const AdversarialResult s = adversarial_prior_search(spec, ascent);
  EXPECT_NEAR(s.risk, g.risk, 2e-3);
  EXPECT_LE(s.risk, g.risk + 1e-3);
  EXPECT_THROW(adversarial_prior_search(spec, AdversarialSearchConfig{SearchStrategy::grid, 0.9}),
               std::invalid_argument);
}

// Bisection on the threshold theta with sum max(v - theta, 0) = 1.
std::vector<double> bisection_projection(std::span<const double> v) {
  double lo = *std::min_element(v.begin(), v.end()) - 1.0, hi = *std::max_element(v.begin(), v.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : v) s += std::max(x - mid, 0.0);
    (s > 1.0 ? lo : hi) = mid;
  }
  std::vector<double> out;
  for (double x : v) out.push_back(std::max(x - 0.5 * (lo + hi), 0.0));
  return out;
}

TEST(ProjectToSimplex, MatchesBisectionOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(2 + i % 6);
    for (double& x : v) x = n(rng);
    const Prior p = project_to_simplex(v);
    const auto expected = bisection_projection(v);
    for (std::size_t y = 0; y < v.size(); ++y) EXPECT_NEAR(p[y], expected[y], 1e-12);
  }
  const std::vector<double> inside{0.2, 0.3, 0.5};
  const Prior kept = project_to_simplex(inside);
  for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(kept[y], inside[y], 1e-15);
}

}  // namespace
}  // namespace tla
