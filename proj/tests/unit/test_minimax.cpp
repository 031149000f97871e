#include <gtest/gtest.h>
#include <gmock/gmock.h>

#include <cmath>

#include "tla/metrics.hpp"
#include "tla/minimax.hpp"

namespace tla {
namespace {

using ::testing::HasSubstr;

MinimaxConfig small_config() {
  MinimaxConfig c;
  c.warmup_epochs = 2;
  c.minimax_epochs = 6;
  c.finetune_epochs = 3;
  c.train.batch_size = 32;
  c.train.decay_epochs = {9};
  return c;
}

LabeledDataset three_class(std::uint64_t seed) {
  const std::vector<std::size_t> counts{200, 80, 30};
  return sample_mixture(MixtureSpec::circle(3, 1.5), counts, seed);
}

TEST(RunMinimax, ShapeAndPhases) {
  const MinimaxConfig c = small_config();
  const LabeledDataset data = three_class(1);
  const RunReport r = run_minimax(c, data);
  ASSERT_EQ(r.epochs.size(), 11u);
  EXPECT_EQ(r.pi_train, data.empirical_prior());
  for (std::size_t e = 0; e < 11; ++e) {
    EXPECT_EQ(r.epochs[e].epoch, e + 1);
    const Phase expected = e < 2 ? Phase::warmup : e < 8 ? Phase::minimax : Phase::finetune;
    EXPECT_EQ(r.epochs[e].phase, expected);
    EXPECT_EQ(r.epochs[e].prior_risks.size(), 3u);
  }
  EXPECT_EQ(r.epochs[0].prior, r.pi_train);
  EXPECT_EQ(r.epochs[1].prior, r.pi_train);
  EXPECT_EQ(r.epochs[2].prior, r.pi_train);
  for (std::size_t e = 8; e < 11; ++e) EXPECT_EQ(r.epochs[e].prior, r.final_prior);
  EXPECT_NE(r.final_prior, r.pi_train);
}

TEST(RunMinimax, NoMinimaxEpochsReducesToCrossEntropy) {
  MinimaxConfig tla = small_config();
  tla.minimax_epochs = 0;
  MinimaxConfig ce = tla;
  ce.loss = LossVariant::ce;
  const LabeledDataset data = three_class(2);
  const RunReport a = run_minimax(tla, data), b = run_minimax(ce, data);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.final_prior, a.pi_train);
}

TEST(RunMinimax, ZeroStepEgaKeepsTrainingPrior) {
  MinimaxConfig tla = small_config();
  tla.ascent = AscentMethod::ega;
  tla.alpha_ega = 0.0;
  MinimaxConfig ce = small_config();
  ce.loss = LossVariant::ce;
  const LabeledDataset data = three_class(3);
  const RunReport a = run_minimax(tla, data), b = run_minimax(ce, data);
  EXPECT_EQ(a.final_prior, a.pi_train);
  EXPECT_EQ(a.params, b.params);
}

TEST(RunMinimax, EgaTrajectoryIsOneStepPerEpoch) {
  MinimaxConfig c = small_config();
  c.ascent = AscentMethod::ega;
  c.alpha_ega = 0.5;
  const RunReport r = run_minimax(c, three_class(4));
  for (std::size_t e = 2; e < 8; ++e) {
    AscentState s(r.epochs[e].prior, AscentMethod::ega, 0.5);
    const Prior next = ega_step(s, r.epochs[e].prior_risks.estimates);
    const Prior& recorded = e + 1 < 8 ? r.epochs[e + 1].prior : r.final_prior;
    for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(recorded[y], next[y], 1e-15);
  }
}

TEST(RunMinimax, Deterministic) {
  const MinimaxConfig c = small_config();
  const LabeledDataset data = three_class(5);
  const LabeledDataset eval = sample_mixture(MixtureSpec::circle(3, 1.5), std::vector<std::size_t>{50, 50, 50}, 9);
  const RunReport a = run_minimax(c, data, &eval), b = run_minimax(c, data, &eval);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.final_prior, b.final_prior);
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    EXPECT_EQ(a.epochs[e].mean_loss, b.epochs[e].mean_loss);
    EXPECT_EQ(a.epochs[e].eval_accuracies, b.epochs[e].eval_accuracies);
  }
  EXPECT_TRUE(a.eval_accuracies.has_value());
}

TEST(RunMinimax, ErrorsCarryPhaseContext) {
  MinimaxConfig c = small_config();
  c.train.learning_rate = 1e200;
  c.train.warmup_epochs = 0;
  try {
    run_minimax(c, three_class(6));
    FAIL() << "expected divergence";
  } catch (const std::domain_error& e) {
    EXPECT_THAT(e.what(), HasSubstr("phase, epoch"));
  }
  MinimaxConfig bad = small_config();
  bad.worst_count = 4;
  EXPECT_THROW(run_minimax(bad, three_class(6)), std::invalid_argument);
  bad = small_config();
  bad.model_fraction = 1.0;
  EXPECT_THROW(run_minimax(bad, three_class(6)), std::invalid_argument);
}

TEST(RunMinimax, SkewedTwoClassLineImprovesWorstClass) {
  const MixtureSpec spec = MixtureSpec::two_class_line();
  const std::vector<std::size_t> counts{9000, 1000}, balanced{2000, 2000};
  MinimaxConfig tla;
  tla.warmup_epochs = 5;
  tla.minimax_epochs = 60;
  tla.finetune_epochs = 10;
  tla.train.decay_epochs = {50, 70};
  MinimaxConfig ce = tla;
  ce.loss = LossVariant::ce;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LabeledDataset data = sample_mixture(spec, counts, 100 + seed);
    const LabeledDataset eval = sample_mixture(spec, balanced, 200 + seed);
    tla.seeds = ce.seeds = MinimaxSeeds{seed, seed + 1, seed + 2, seed + 3};
    const RunReport a = run_minimax(tla, data, &eval), b = run_minimax(ce, data, &eval);
    EXPECT_GT(a.final_prior[1], a.pi_train[1]) << "seed " << seed;
    EXPECT_GT(worst_class_accuracy(*a.eval_accuracies).accuracy, worst_class_accuracy(*b.eval_accuracies).accuracy)
        << "seed " << seed;
  }
}

TEST(SwapComponents, FourCellsShareEverythingElse) {
  MinimaxConfig base = small_config();
  base.seeds.split = 42;
  const auto cells = swap_components(base);
  EXPECT_EQ(cells[3].loss, LossVariant::twce);
  EXPECT_EQ(cells[3].ascent, AscentMethod::ega);
  EXPECT_EQ(cells[1].loss, LossVariant::tla);
  EXPECT_EQ(cells[1].ascent, AscentMethod::ega);
  for (const MinimaxConfig& c : cells) {
    EXPECT_EQ(c.seeds.split, 42u);
    EXPECT_EQ(c.total_epochs(), base.total_epochs());
  }
}

}  // namespace
}  // namespace tla
