#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tla/losses.hpp"
#include "tla/mc.hpp"
#include "tla/model.hpp"
#include "tla/theory.hpp"

namespace {

using namespace tla;

const std::vector<double> kErrors{0.96, 0.89, 0.86, 0.75, 0.67, 0.06, 0.05, 0.03, 0.03, 0.02};

void BM_ProbFindWorst(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(prob_find_worst(kErrors, 3, n));
}
BENCHMARK(BM_ProbFindWorst)->Arg(2)->Arg(16)->Arg(64)->Arg(1024);

void BM_EgaEstimateMse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ega_estimate_mse(0.3, n));
}
BENCHMARK(BM_EgaEstimateMse)->Arg(2)->Arg(64)->Arg(4096);

void BM_BatchLossGradient(benchmark::State& state) {
  const std::size_t k = 10, batch = 128;
  std::vector<double> w(k);
  for (std::size_t y = 0; y < k; ++y) w[y] = 1.0 / static_cast<double>(y + 1);
  const Prior train = Prior::normalized(w);
  const Prior target = Prior::uniform(k);
  const auto variant = static_cast<LossVariant>(state.range(0));
  const GeneralizedLossSpec spec = spec_from_variant(variant, train, target, {}, LossHyper{});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix logits(batch, k);
  for (double& v : logits.values()) v = normal(rng);
  std::vector<ClassIndex> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = i % k;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch_loss(spec, logits, labels, true));
  state.SetLabel(std::string(loss_variant_name(variant)));
}
BENCHMARK(BM_BatchLossGradient)
    ->Arg(static_cast<int>(LossVariant::ce))
    ->Arg(static_cast<int>(LossVariant::tla))
    ->Arg(static_cast<int>(LossVariant::focal))
    ->Arg(static_cast<int>(LossVariant::gml));

void BM_McWorstClassFailure(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mc_worst_class_failure(kErrors, 3, 16, 10000, 7, 1));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_McWorstClassFailure)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const LabeledDataset data = sample_mixture(MixtureSpec::circle(10, 2.0), std::vector<std::size_t>(10, 500), 3);
  const GeneralizedLossSpec spec = spec_from_variant(LossVariant::tla, data.empirical_prior(), Prior::uniform(10), {},
                                                     LossHyper{});
  const Architecture arch = state.range(0) == 0 ? Architecture::linear() : Architecture::mlp(32);
  ModelParams p = ModelParams::initialize(arch, 2, 10, 4);
  OptimizerState opt = OptimizerState::zeros_like(p);
  TrainConfig tc;
  std::size_t epoch = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_epoch(p, opt, data, spec, tc, epoch++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
