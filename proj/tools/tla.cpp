// Command-line front end: train, ablate, theory, mc, oracle, report.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#ifdef TLA_CLI11_SINGLE_HEADER
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "tla/experiment.hpp"

namespace {

using nlohmann::json;

struct Options {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out = "artifacts";
  std::string input;  // report only
};

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw tla::ConfigError("--config", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw tla::ConfigError("--config", std::string("parse error: ") + e.what());
  }
}

// Preset first, then the config file, then flags.
json resolve(const Options& o, const std::string& experiment) {
  json cfg = o.preset.empty() ? json::object() : tla::preset_config(o.preset);
  if (!o.config.empty()) {
    const json file = load_json(o.config);
    if (file.contains("experiment") && file["experiment"] != experiment) {
      throw tla::ConfigError("experiment", "config is for " + file["experiment"].dump() + " but the subcommand is '" +
                                               experiment + "'");
    }
    cfg.merge_patch(file);
  }
  cfg["experiment"] = experiment;
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.trials) cfg["curves"]["trials"] = *o.trials;
  return cfg;
}

int fail(const std::exception& e) {
  json record = tla::error_record(e);
  if (const auto* f = dynamic_cast<const tla::ExperimentFailure*>(&e)) {
    record["kind"] = "run";
    record["artifact_dir"] = f->dir().string();
  }
  std::cerr << record.dump() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax training with targeted logit adjustment"};
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--preset", o.preset, "Named preset: cifar10-lt, cifar10-step, cifar100-lt, cifar100-step, synthetic");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Base directory for artifacts")->capture_default_str();
  };
  const std::pair<const char*, const char*> commands[] = {
      {"train", "Three-phase minimax training over eval.runs seeds"},
      {"ablate", "{TLA, TWCE} x {linear, EGA} ablation grid"},
      {"theory", "Closed-form find-worst and estimate-MSE curves"},
      {"mc", "Monte Carlo validation of the theory curves"},
      {"oracle", "Bayes-oracle adversarial prior search"},
  };
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    add_common(sub);
    if (std::string(name) == "mc" || std::string(name) == "theory") {
      sub->add_option("--trials", o.trials, "Monte Carlo trials per point");
    }
  }
  CLI::App* report = app.add_subcommand("report", "Rebuild plot CSVs from a report.jsonl");
  report->add_option("input", o.input, "report.jsonl from a train or ablate run")->required()->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "report") {
      std::filesystem::create_directories(o.out);
      tla::export_report(o.input, o.out);
      std::cout << o.out << '\n';
      return 0;
    }
    if (o.config.empty() && o.preset.empty() && (cmd == "train" || cmd == "ablate" || cmd == "oracle")) {
      throw tla::ConfigError("--config", "give --config or --preset");
    }
    const std::filesystem::path dir = tla::run_experiment(resolve(o, cmd), o.out);
    std::cout << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}
