#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tla/data.hpp"
#include "tla/metrics.hpp"
#include "tla/minimax.hpp"
#include "tla/oracle.hpp"
#include "tla/theory.hpp"

namespace tla {

// Invalid configuration; field() is the dotted path of the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { train, ablate, theory, mc, oracle };
std::string_view experiment_name(ExperimentKind k);

struct DatasetConfig {
  enum class Source { circle, line, csv };
  Source source = Source::circle;
  std::size_t classes = 10;
  double radius = 2.0;
  std::vector<double> centers;  // line
  double variance = 1.0;        // line
  std::string path;             // csv
  bool header = false;          // csv
  std::optional<ImbalanceProfile> imbalance;
  std::vector<std::size_t> counts;  // explicit counts override the profile
  std::string eval_path;            // csv evaluation set
};

struct EvalConfig {
  std::size_t samples_per_class = 1000;
  std::size_t runs = 1;
};

struct CurveConfig {
  std::vector<double> error_vector;  // sorted descending before use
  std::size_t worst_count = 3;
  std::vector<std::size_t> samples{2, 4, 8, 16, 32, 64};
  std::vector<double> mse_probabilities;  // empty: every entry of error_vector
  MseSumStart mse_start = MseSumStart::from_zero;
  std::size_t trials = 100000;
  unsigned threads = 1;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::train;
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  MinimaxConfig minimax;
  EvalConfig eval;
  CurveConfig curves;
  AdversarialSearchConfig oracle;
  std::string config_hash;  // set by run_experiment, copied into checkpoints
};

// Throws ConfigError naming the field for unknown keys, wrong types,
// out-of-range values and unknown enumeration names.
ExperimentConfig parse_config(const nlohmann::json& j);

std::vector<std::string_view> preset_names();
// Complete config for a named preset; throws ConfigError for unknown names.
nlohmann::json preset_config(std::string_view name);

// Seeds for run r of an experiment with master seed s.
struct RunSeeds {
  std::uint64_t data;
  std::uint64_t eval;
  MinimaxSeeds minimax;
};
RunSeeds seeds_for_run(std::uint64_t master, std::size_t run);

std::optional<MixtureSpec> mixture_of(const DatasetConfig& d);
std::vector<std::size_t> training_counts(const DatasetConfig& d);
LabeledDataset build_training_set(const DatasetConfig& d, std::uint64_t seed);
// Balanced fresh mixture draws, or the csv evaluation file. Empty when neither exists.
std::optional<LabeledDataset> build_eval_set(const DatasetConfig& d, std::size_t per_class, std::uint64_t seed);

struct RunOutcome {
  std::size_t run = 0;
  RunReport report;
  std::optional<WorstClass> worst;
  double worst_class_prior = 0.0;
  double balanced = 0.0;
};

struct CellOutcome {
  LossVariant loss = LossVariant::tla;
  AscentMethod ascent = AscentMethod::linear;
  std::vector<RunOutcome> runs;
  double median_worst_accuracy = 0.0;
  double median_worst_prior = 0.0;
  double median_balanced = 0.0;
};

double median(std::vector<double> v);

// Every run of one minimax config; artifacts go to dir/run_<r>/ when dir is set.
CellOutcome run_cell(const ExperimentConfig& config, const MinimaxConfig& minimax,
                     const std::optional<std::filesystem::path>& dir);
// The four loss/ascent cells on shared data, plus comparison.csv.
std::vector<CellOutcome> run_ablation(const ExperimentConfig& config, const std::optional<std::filesystem::path>& dir);

void write_theory_curves(const ExperimentConfig& config, const std::filesystem::path& dir);
void write_mc_curves(const ExperimentConfig& config, const std::filesystem::path& dir);
void write_oracle_result(const ExperimentConfig& config, const std::filesystem::path& dir);
// Trajectory and summary CSVs rebuilt from a run report file.
void export_report(const std::filesystem::path& report_jsonl, const std::filesystem::path& dir);

// Raised after a failure inside an artifact directory; failure.json is
// already written there.
class ExperimentFailure : public std::runtime_error {
 public:
  ExperimentFailure(std::filesystem::path dir, const std::string& message)
      : std::runtime_error(message), dir_(std::move(dir)) {}
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

std::uint64_t fnv1a64(std::string_view bytes);
nlohmann::json error_record(const std::exception& e);

// Parses config, creates out_base/<experiment>-<UTC timestamp>/, writes
// manifest.json and runs the experiment. Returns the artifact directory.
std::filesystem::path run_experiment(const nlohmann::json& config, const std::filesystem::path& out_base);

}  // namespace tla
