#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tla/ascent.hpp"
#include "tla/data.hpp"
#include "tla/losses.hpp"
#include "tla/model.hpp"
#include "tla/prior.hpp"

namespace tla {

struct MinimaxSeeds {
  std::uint64_t split = 1;
  std::uint64_t init = 2;
  std::uint64_t shuffle = 3;
  std::uint64_t ties = 4;
};

struct MinimaxConfig {
  std::size_t warmup_epochs = 5;    // T0
  std::size_t minimax_epochs = 95;  // T1
  std::size_t finetune_epochs = 20; // T2
  LossVariant loss = LossVariant::tla;
  LossHyper hyper;
  std::size_t drw_epoch = 0;  // LDAM: deferred re-weighting from this epoch on; 0 never
  AscentMethod ascent = AscentMethod::linear;
  double alpha_linear = 0.01;
  double alpha_ega = 0.1;
  std::size_t worst_count = 1;  // M; 0 picks it per step from the risks
  Architecture architecture = Architecture::linear();
  TrainConfig train = default_train();
  double model_fraction = 0.8;
  MinimaxSeeds seeds;

  std::size_t total_epochs() const { return warmup_epochs + minimax_epochs + finetune_epochs; }
  double alpha() const { return ascent == AscentMethod::linear ? alpha_linear : alpha_ega; }
  void validate() const;

  static TrainConfig default_train() {
    TrainConfig t;
    t.decay_epochs = {60, 110};
    return t;
  }
};

enum class Phase { warmup, minimax, finetune };
std::string_view phase_name(Phase p);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  Phase phase = Phase::warmup;
  double mean_loss = 0.0;
  Prior prior = Prior::uniform(1);  // pi^t used for this epoch's training
  ClassRisks prior_risks;  // on D_prior after the epoch's updates
  std::optional<std::vector<double>> eval_accuracies;
};

struct RunReport {
  MinimaxConfig config;
  Prior pi_train = Prior::uniform(1);  // of the full training set
  Prior final_prior = Prior::uniform(1);
  std::vector<EpochRecord> epochs;
  ModelParams params;
  std::optional<std::vector<double>> eval_accuracies;  // after fine-tuning
};

// Warmup on D_model at pi^train, then T1 epochs each followed by one ascent
// step with risks measured on D_prior, then fine-tuning on the full set with
// the final prior. pi^train is the class frequency of the full training set
// in every phase. eval_set, when given, is scored after every epoch.
RunReport run_minimax(const MinimaxConfig& config, const LabeledDataset& train,
                      const LabeledDataset* eval_set = nullptr);

// {TLA, TWCE} x {linear, EGA}, everything else copied from base.
std::array<MinimaxConfig, 4> swap_components(const MinimaxConfig& base);

}  // namespace tla
