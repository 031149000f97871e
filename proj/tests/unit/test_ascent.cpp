#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "tla/ascent.hpp"

namespace tla {
namespace {

void expect_on_simplex(const Prior& p) {
  double s = 0.0;
  for (double v : p.values()) {
    EXPECT_GE(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(ClassRisks, FromPredictions) {
  const std::vector<ClassIndex> labels{0, 0, 1, 1};
  EXPECT_EQ(class_risks_from_predictions(labels, labels, 2).estimates, (std::vector<double>{0.0, 0.0}));
  const std::vector<ClassIndex> constant{0, 0, 0, 0};
  EXPECT_EQ(class_risks_from_predictions(constant, labels, 2).estimates, (std::vector<double>{0.0, 1.0}));

  const std::vector<ClassIndex> y{1, 1, 1, 1, 0};
  const std::vector<ClassIndex> pred{0, 0, 0, 1, 0};
  const ClassRisks r = class_risks_from_predictions(pred, y, 2);
  EXPECT_DOUBLE_EQ(r.estimates[1], 0.75);
  EXPECT_EQ(r.counts[1], 4u);
  EXPECT_EQ(r.worst(), 1u);
}

TEST(ClassRisks, AbsentClassIsAnError) {
  const std::vector<ClassIndex> y{0, 0};
  EXPECT_THROW(class_risks_from_predictions(y, y, 2), std::invalid_argument);
}

TEST(WorstIndicator, Examples) {
  Rng rng(1);
  const std::vector<double> risks{0.9, 0.2, 0.1};
  EXPECT_EQ(worst_m_indicator(risks, 1, rng), Prior({1.0, 0.0, 0.0}));
  EXPECT_EQ(worst_m_indicator(risks, 2, rng), Prior({0.5, 0.5, 0.0}));
  EXPECT_THROW(worst_m_indicator(risks, 0, rng), std::invalid_argument);
  EXPECT_THROW(worst_m_indicator(risks, 4, rng), std::invalid_argument);
}

TEST(WorstIndicator, FairTies) {
  const std::vector<double> risks{0.5, 0.5};
  int first = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng rng = make_rng(seed, 0);
    first += worst_m_indicator(risks, 1, rng)[0] == 1.0;
  }
  EXPECT_NEAR(first / 1e4, 0.5, 0.02);
}

TEST(AutoWorstCount, Margin) {
  const std::vector<double> risks{0.30, 0.27, 0.26, 0.1};
  EXPECT_EQ(auto_worst_count(risks), 3u);
  EXPECT_EQ(auto_worst_count(risks, 0.01), 1u);
}

TEST(LinearAscent, Examples) {
  AscentState s(Prior::uniform(4), AscentMethod::linear, 0.1);
  const Prior next = linear_ascent_step(s, Prior::one_hot(4, 1));
  EXPECT_NEAR(next[0], 0.225, 1e-15);
  EXPECT_NEAR(next[1], 0.325, 1e-15);
  EXPECT_EQ(s.current, next);
  EXPECT_EQ(s.trajectory.size(), 2u);

  AscentState nearly(Prior::uniform(3), AscentMethod::linear, 0.999);
  const Prior end = linear_ascent_step(nearly, Prior::one_hot(3, 2));
  EXPECT_NEAR(end[2], 1.0, 1e-3);

  const Prior start({0.2, 0.3, 0.5});
  AscentState fixed(start, AscentMethod::linear, 0.3);
  const Prior same = linear_ascent_step(fixed, start);
  for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(same[y], start[y], 1e-16);

  EXPECT_THROW(AscentState(Prior::uniform(2), AscentMethod::linear, 1.0), std::invalid_argument);
  EXPECT_THROW(AscentState(Prior::uniform(2), AscentMethod::linear, 0.1, 3), std::invalid_argument);
  EXPECT_THROW(linear_ascent_step(fixed, Prior::uniform(2)), std::invalid_argument);
}

TEST(Ega, Examples) {
  AscentState s(Prior::uniform(2), AscentMethod::ega, 0.1);
  const std::vector<double> r{1.0, 0.0};
  const Prior next = ega_step(s, r);
  // e^0.1 / (e^0.1 + 1) at 40 digits.
  EXPECT_NEAR(next[0], 0.52497918747893999, 1e-15);
  EXPECT_NEAR(next[1], 0.47502081252106001, 1e-15);

  const Prior start({0.1, 0.6, 0.3});
  AscentState equal(start, AscentMethod::ega, 0.5);
  const std::vector<double> flat{0.4, 0.4, 0.4};
  const Prior kept = ega_step(equal, flat);
  for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(kept[y], start[y], 1e-15);

  AscentState zero(start, AscentMethod::ega, 0.0);
  const std::vector<double> varied{0.9, 0.1, 0.5};
  EXPECT_EQ(ega_step(zero, varied), start);

  EXPECT_THROW(ega_step(s, flat), std::invalid_argument);
  EXPECT_THROW(linear_ascent_step(s, Prior::uniform(2)), std::logic_error);
}

TEST(AscentProperties, RandomStepsStayOnSimplex) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(5), risks(5);
    for (double& v : w) v = u(gen);
    w[trial % 5] = 0.0;
    for (double& v : risks) v = u(gen);
    const Prior start = Prior::normalized(w);
    const double alpha = 0.01 + 0.9 * u(gen);

    AscentState lin(start, AscentMethod::linear, alpha, 1 + trial % 3);
    Rng ties(trial);
    const Prior a = ascent_step(lin, risks, ties);
    expect_on_simplex(a);
    for (std::size_t y = 0; y < 5; ++y) EXPECT_GE(a[y], (1.0 - alpha) * start[y] - 1e-16);

    AscentState ega(start, AscentMethod::ega, 10.0 * alpha);
    const Prior b = ascent_step(ega, risks, ties);
    expect_on_simplex(b);
    EXPECT_EQ(b[trial % 5], 0.0);
    for (std::size_t y = 0; y < 5; ++y)
      if (start[y] > 0.0) EXPECT_GT(b[y], 0.0);
  }
}

TEST(AscentProperties, LinearMovesMassToWorst) {
  const Prior start({0.6, 0.3, 0.1});
  AscentState s(start, AscentMethod::linear, 0.05);
  const std::vector<double> risks{0.1, 0.2, 0.7};
  Rng rng(0);
  EXPECT_GT(ascent_step(s, risks, rng)[2], start[2]);
}

TEST(AscentProperties, AutoCountWhenMIsZero) {
  AscentState s(Prior::uniform(3), AscentMethod::linear, 0.5, 0);
  const std::vector<double> risks{0.5, 0.48, 0.1};
  Rng rng(0);
  const Prior next = ascent_step(s, risks, rng);
  EXPECT_NEAR(next[0], next[1], 1e-15);
  EXPECT_LT(next[2], 1.0 / 3.0);
}

TEST(AscentMethod, Names) {
  EXPECT_EQ(parse_ascent_method("ega"), AscentMethod::ega);
  EXPECT_EQ(parse_ascent_method(ascent_method_name(AscentMethod::linear)), AscentMethod::linear);
  EXPECT_FALSE(parse_ascent_method("sgd").has_value());
}

}  // namespace
}  // namespace tla
