#include "tla/minimax.hpp"

#include <stdexcept>
#include <string>

#include "tla/metrics.hpp"
#include "tla/random.hpp"

namespace tla {
namespace {

template <class F>
auto with_phase(Phase phase, std::size_t epoch, F&& body) {
  const auto context = [&](const std::exception& e) {
    return std::string(phase_name(phase)) + " phase, epoch " + std::to_string(epoch) + ": " + e.what();
  };
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(context(e));
  } catch (const std::domain_error& e) {
    throw std::domain_error(context(e));
  } catch (const std::exception& e) {
    throw std::runtime_error(context(e));
  }
}

}  // namespace

void MinimaxConfig::validate() const {
  if (!(model_fraction > 0.0 && model_fraction < 1.0)) {
    throw std::invalid_argument("MinimaxConfig: model_fraction must lie in (0, 1)");
  }
  if (!(alpha_linear > 0.0 && alpha_linear < 1.0)) {
    throw std::invalid_argument("MinimaxConfig: alpha_linear must lie in (0, 1)");
  }
  if (!(alpha_ega >= 0.0)) throw std::invalid_argument("MinimaxConfig: alpha_ega must be non-negative");
  if (total_epochs() == 0) throw std::invalid_argument("MinimaxConfig: no epochs to run");
  if (architecture.kind == Architecture::Kind::mlp && architecture.hidden_width == 0) {
    throw std::invalid_argument("MinimaxConfig: mlp needs a positive hidden width");
  }
  train.validate();
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::warmup: return "warmup";
    case Phase::minimax: return "minimax";
    case Phase::finetune: return "finetune";
  }
  return "unknown";
}

RunReport run_minimax(const MinimaxConfig& config, const LabeledDataset& train, const LabeledDataset* eval_set) {
  config.validate();
  if (config.worst_count > train.class_count()) throw std::invalid_argument("run_minimax: M exceeds K");
  if (eval_set != nullptr && eval_set->class_count() != train.class_count()) {
    throw std::invalid_argument("run_minimax: evaluation set has a different class count");
  }
  const SplitDataset split = partition_dataset(train, config.model_fraction, config.seeds.split);
  const LabeledDataset& model_part = split.model_part;
  const std::size_t k = train.class_count();

  RunReport report{config, train.empirical_prior(), Prior::uniform(k), {}, {}, std::nullopt};
  report.params = ModelParams::initialize(config.architecture, train.dim(), k, config.seeds.init);
  OptimizerState opt = OptimizerState::zeros_like(report.params);
  TrainConfig tc = config.train;
  tc.seed = config.seeds.shuffle;
  tc.epochs = config.total_epochs();

  const Prior pi_train = train.empirical_prior();
  AscentState ascent(pi_train, config.ascent, config.alpha(), config.worst_count);
  Rng tie_rng = make_rng(config.seeds.ties, 0);

  const auto hyper_at = [&](std::size_t e) {
    LossHyper h = config.hyper;
    if (config.drw_epoch > 0 && e >= config.drw_epoch) h.drw_weights = true;
    return h;
  };

  const auto record = [&](std::size_t epoch, Phase phase, double loss, const Prior& used) {
    EpochRecord r{epoch, phase, loss, used, estimate_class_risks(report.params, split.prior_part), std::nullopt};
    if (eval_set != nullptr) r.eval_accuracies = class_accuracies(report.params, *eval_set);
    report.epochs.push_back(std::move(r));
  };

  std::size_t epoch = 0;
  for (std::size_t t = 0; t < config.warmup_epochs + config.minimax_epochs; ++t) {
    ++epoch;
    const Phase phase = t < config.warmup_epochs ? Phase::warmup : Phase::minimax;
    with_phase(phase, epoch, [&] {
      const Prior used = ascent.current;
      const GeneralizedLossSpec spec =
          spec_from_variant(config.loss, pi_train, used, model_part.class_counts(), hyper_at(epoch));
      const double loss = train_epoch(report.params, opt, model_part, spec, tc, epoch);
      record(epoch, phase, loss, used);
      if (phase == Phase::minimax) ascent_step(ascent, report.epochs.back().prior_risks.estimates, tie_rng);
    });
  }

  report.final_prior = ascent.current;
  for (std::size_t t = 0; t < config.finetune_epochs; ++t) {
    ++epoch;
    with_phase(Phase::finetune, epoch, [&] {
      const GeneralizedLossSpec spec =
          spec_from_variant(config.loss, pi_train, report.final_prior, train.class_counts(), hyper_at(epoch));
      const double loss = train_epoch(report.params, opt, train, spec, tc, epoch);
      record(epoch, Phase::finetune, loss, report.final_prior);
    });
  }
  if (eval_set != nullptr) report.eval_accuracies = class_accuracies(report.params, *eval_set);
  return report;
}

std::array<MinimaxConfig, 4> swap_components(const MinimaxConfig& base) {
  std::array<MinimaxConfig, 4> out{base, base, base, base};
  const std::array losses = {LossVariant::tla, LossVariant::tla, LossVariant::twce, LossVariant::twce};
  const std::array methods = {AscentMethod::linear, AscentMethod::ega, AscentMethod::linear, AscentMethod::ega};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i].loss = losses[i];
    out[i].ascent = methods[i];
  }
  return out;
}

}  // namespace tla
