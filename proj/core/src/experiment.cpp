#include "tla/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "tla/mc.hpp"
#include "tla/random.hpp"
#include "tla/report.hpp"

#ifndef TLA_VERSION
#define TLA_VERSION "unknown"
#endif

namespace tla {
namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

// Typed, path-aware view of one config object.
class Section {
 public:
  Section(const json& j, std::string path, std::vector<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    for (const auto& [key, value] : j_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ConfigError(field(key), "unknown key; allowed: " + join(allowed));
      }
    }
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  Section child(const std::string& key, std::vector<std::string> allowed) const {
    static const json empty = json::object();
    return Section(has(key) ? j_.at(key) : empty, field(key), std::move(allowed));
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "expected a finite number");
    return d;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return as_count(j_.at(key), field(key));
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(field(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const std::string& key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(field(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::string choice(const std::string& key, std::string fallback, const std::vector<std::string>& allowed) const {
    std::string v = text(key, std::move(fallback));
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      throw ConfigError(field(key), "unknown value '" + v + "'; allowed: " + join(allowed));
    }
    return v;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(field(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of non-negative integers");
    std::vector<std::size_t> out;
    for (const json& e : v) out.push_back(static_cast<std::size_t>(as_count(e, field(key))));
    return out;
  }

 private:
  static std::uint64_t as_count(const json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(field, "must be a non-negative integer");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ConfigError(field, "expected a non-negative integer");
  }

  const json& j_;
  std::string path_;
};

std::vector<std::string> loss_names() {
  std::vector<std::string> out;
  for (LossVariant v : kAllLossVariants) out.emplace_back(loss_variant_name(v));
  return out;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

DatasetConfig parse_dataset(const Section& root) {
  const Section s = root.child("dataset", {"source", "classes", "radius", "centers", "variance", "path", "header",
                                           "imbalance", "counts", "eval_path"});
  DatasetConfig d;
  const std::string source = s.choice("source", "circle", {"circle", "line", "csv"});
  d.source = source == "circle" ? DatasetConfig::Source::circle
             : source == "line" ? DatasetConfig::Source::line
                                : DatasetConfig::Source::csv;
  d.classes = s.count("classes", 10);
  d.radius = s.number("radius", 2.0);
  d.centers = s.numbers("centers", {});
  d.variance = s.number("variance", 1.0);
  d.path = s.text("path", "");
  d.header = s.flag("header", false);
  d.counts = s.counts("counts", {});
  d.eval_path = s.text("eval_path", "");
  if (s.has("imbalance")) {
    const Section im = s.child("imbalance", {"kind", "ratio", "base_count"});
    const std::string kind = im.choice("kind", "long_tail", {"long_tail", "step"});
    ImbalanceProfile p;
    p.kind = kind == "step" ? ImbalanceKind::step : ImbalanceKind::long_tail;
    p.ratio = im.number("ratio", 1.0);
    p.base_count = im.count("base_count", 0);
    require(p.ratio > 0.0 && p.ratio <= 1.0, im.field("ratio"), "must lie in (0, 1]");
    require(p.base_count > 0, im.field("base_count"), "must be positive");
    d.imbalance = p;
  }
  switch (d.source) {
    case DatasetConfig::Source::circle:
      require(d.classes >= 2, s.field("classes"), "need at least 2 classes");
      require(d.radius > 0.0, s.field("radius"), "must be positive");
      break;
    case DatasetConfig::Source::line:
      require(d.centers.size() >= 2, s.field("centers"), "need at least 2 centers");
      require(d.variance > 0.0, s.field("variance"), "must be positive");
      d.classes = d.centers.size();
      break;
    case DatasetConfig::Source::csv:
      require(!d.path.empty(), s.field("path"), "required when source is csv");
      break;
  }
  if (d.source != DatasetConfig::Source::csv) {
    require(!d.counts.empty() || d.imbalance.has_value(), s.field("counts"),
            "give either counts or an imbalance profile");
    require(d.counts.empty() || d.counts.size() == d.classes, s.field("counts"), "needs one entry per class");
  }
  return d;
}

MinimaxConfig parse_minimax(const Section& root) {
  MinimaxConfig c;
  const Section model = root.child("model", {"architecture", "hidden_width", "learning_rate", "momentum",
                                             "weight_decay", "batch_size", "lr_warmup_epochs", "decay_epochs",
                                             "decay_factor"});
  const std::string arch = model.choice("architecture", "linear", {"linear", "mlp"});
  c.architecture = arch == "linear" ? Architecture::linear() : Architecture::mlp(model.count("hidden_width", 64));
  if (arch == "mlp") require(c.architecture.hidden_width > 0, model.field("hidden_width"), "must be positive");
  c.train.learning_rate = model.number("learning_rate", c.train.learning_rate);
  c.train.momentum = model.number("momentum", c.train.momentum);
  c.train.weight_decay = model.number("weight_decay", c.train.weight_decay);
  c.train.batch_size = model.count("batch_size", c.train.batch_size);
  c.train.warmup_epochs = model.count("lr_warmup_epochs", c.train.warmup_epochs);
  c.train.decay_epochs = model.counts("decay_epochs", c.train.decay_epochs);
  c.train.decay_factor = model.number("decay_factor", c.train.decay_factor);
  require(c.train.learning_rate >= 0.0, model.field("learning_rate"), "must be non-negative");
  require(c.train.momentum >= 0.0 && c.train.momentum < 1.0, model.field("momentum"), "must lie in [0, 1)");
  require(c.train.weight_decay >= 0.0, model.field("weight_decay"), "must be non-negative");
  require(c.train.batch_size > 0, model.field("batch_size"), "must be positive");
  require(c.train.decay_factor > 0.0 && c.train.decay_factor <= 1.0, model.field("decay_factor"), "must lie in (0, 1]");

  const Section loss = root.child("loss", {"variant", "tau", "vs_tau", "gamma", "ldam_max_margin", "drw_beta",
                                           "drw_weights", "drw_epoch"});
  const std::string variant = loss.choice("variant", "tla", loss_names());
  c.loss = *parse_loss_variant(variant);
  const double tau = loss.number("tau", 1.0);
  c.hyper.tau = c.loss == LossVariant::vs ? loss.number("vs_tau", tau) : tau;
  c.hyper.gamma = loss.number("gamma", 0.0);
  c.hyper.ldam_max_margin = loss.number("ldam_max_margin", c.hyper.ldam_max_margin);
  c.hyper.drw_beta = loss.number("drw_beta", c.hyper.drw_beta);
  c.hyper.drw_weights = loss.flag("drw_weights", false);
  c.drw_epoch = loss.count("drw_epoch", 0);
  require(c.hyper.drw_beta > 0.0 && c.hyper.drw_beta < 1.0, loss.field("drw_beta"), "must lie in (0, 1)");

  const Section ascent = root.child("ascent", {"method", "alpha_linear", "alpha_ega", "worst_count"});
  c.ascent = *parse_ascent_method(ascent.choice("method", "linear", {"linear", "ega"}));
  c.alpha_linear = ascent.number("alpha_linear", c.alpha_linear);
  c.alpha_ega = ascent.number("alpha_ega", c.alpha_ega);
  require(c.alpha_linear > 0.0 && c.alpha_linear < 1.0, ascent.field("alpha_linear"), "must lie in (0, 1)");
  require(c.alpha_ega >= 0.0, ascent.field("alpha_ega"), "must be non-negative");
  if (ascent.has("worst_count") && ascent.raw("worst_count").is_string()) {
    ascent.choice("worst_count", "auto", {"auto"});
    c.worst_count = 0;
  } else {
    c.worst_count = ascent.count("worst_count", 1);
    require(c.worst_count >= 1, ascent.field("worst_count"), "must be at least 1 or \"auto\"");
  }

  const Section mm = root.child("minimax", {"warmup_epochs", "minimax_epochs", "finetune_epochs", "model_fraction"});
  c.warmup_epochs = mm.count("warmup_epochs", c.warmup_epochs);
  c.minimax_epochs = mm.count("minimax_epochs", c.minimax_epochs);
  c.finetune_epochs = mm.count("finetune_epochs", c.finetune_epochs);
  c.model_fraction = mm.number("model_fraction", c.model_fraction);
  require(c.model_fraction > 0.0 && c.model_fraction < 1.0, mm.field("model_fraction"), "must lie in (0, 1)");
  require(c.total_epochs() > 0, mm.field("minimax_epochs"), "at least one epoch is required");
  return c;
}

CurveConfig parse_curves(const Section& root, const ExperimentKind kind) {
  const Section s = root.child("curves", {"error_vector", "worst_count", "samples", "mse_probabilities", "mse_start",
                                          "trials", "threads"});
  CurveConfig c;
  c.error_vector = s.numbers("error_vector", {0.75, 0.67, 0.86, 0.96, 0.89, 0.06, 0.03, 0.05, 0.02, 0.03});
  c.worst_count = s.count("worst_count", c.worst_count);
  c.samples = s.counts("samples", c.samples);
  c.mse_probabilities = s.numbers("mse_probabilities", {});
  c.mse_start = s.choice("mse_start", "zero", {"zero", "one"}) == "zero" ? MseSumStart::from_zero : MseSumStart::from_one;
  c.trials = s.count("trials", c.trials);
  c.threads = static_cast<unsigned>(s.count("threads", 1));
  require(c.error_vector.size() >= 2, s.field("error_vector"), "need at least 2 classes");
  for (double p : c.error_vector) require(p >= 0.0 && p <= 1.0, s.field("error_vector"), "entries must lie in [0, 1]");
  for (double p : c.mse_probabilities) {
    require(p >= 0.0 && p <= 1.0, s.field("mse_probabilities"), "entries must lie in [0, 1]");
  }
  require(c.worst_count >= 1 && c.worst_count <= c.error_vector.size(), s.field("worst_count"),
          "must lie in [1, K]");
  require(!c.samples.empty(), s.field("samples"), "must not be empty");
  for (std::size_t n : c.samples) require(n >= 1, s.field("samples"), "entries must be at least 1");
  if (kind == ExperimentKind::mc) {
    require(c.trials >= kMinMcTrials, s.field("trials"), "must be at least " + std::to_string(kMinMcTrials));
  }
  require(c.threads >= 1, s.field("threads"), "must be at least 1");
  std::sort(c.error_vector.begin(), c.error_vector.end(), std::greater<>());
  return c;
}

AdversarialSearchConfig parse_oracle(const Section& root) {
  const Section s = root.child("oracle", {"strategy", "resolution", "iterations", "step_scale", "tolerance",
                                          "mc_samples"});
  AdversarialSearchConfig c;
  const std::string strategy = s.choice("strategy", "auto", {"auto", "grid", "supergradient"});
  c.strategy = strategy == "auto"   ? SearchStrategy::automatic
               : strategy == "grid" ? SearchStrategy::grid
                                    : SearchStrategy::supergradient;
  c.resolution = s.number("resolution", c.resolution);
  c.iterations = s.count("iterations", c.iterations);
  c.step_scale = s.number("step_scale", c.step_scale);
  c.tolerance = s.number("tolerance", c.tolerance);
  c.mc_samples = s.count("mc_samples", c.mc_samples);
  require(c.resolution > 0.0 && c.resolution <= 0.5, s.field("resolution"), "must lie in (0, 0.5]");
  require(c.iterations > 0, s.field("iterations"), "must be positive");
  require(c.step_scale > 0.0, s.field("step_scale"), "must be positive");
  require(c.mc_samples >= kMinOracleSamples, s.field("mc_samples"),
          "must be at least " + std::to_string(kMinOracleSamples));
  return c;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

void write_text_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

json base_preset() {
  return {{"experiment", "train"},
          {"seed", 0},
          {"model",
           {{"architecture", "linear"},
            {"learning_rate", 0.1},
            {"momentum", 0.9},
            {"weight_decay", 2e-4},
            {"batch_size", 128},
            {"lr_warmup_epochs", 5},
            {"decay_epochs", {60, 110}},
            {"decay_factor", 0.01}}},
          {"ascent", {{"method", "linear"}, {"alpha_linear", 0.01}, {"alpha_ega", 0.1}}},
          {"minimax", {{"warmup_epochs", 5}, {"minimax_epochs", 95}, {"finetune_epochs", 20}, {"model_fraction", 0.8}}},
          {"eval", {{"samples_per_class", 1000}, {"runs", 1}}}};
}

json table_preset(std::size_t classes, double radius, const char* kind, std::size_t base, double tau,
                  double vs_tau, double gamma, std::size_t m) {
  json j = base_preset();
  j["dataset"] = {{"source", "circle"},
                  {"classes", classes},
                  {"radius", radius},
                  {"imbalance", {{"kind", kind}, {"ratio", 0.01}, {"base_count", base}}}};
  j["loss"] = {{"variant", "tla"}, {"tau", tau}, {"vs_tau", vs_tau}, {"gamma", gamma}};
  j["ascent"]["worst_count"] = m;
  return j;
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

std::string_view experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::train: return "train";
    case ExperimentKind::ablate: return "ablate";
    case ExperimentKind::theory: return "theory";
    case ExperimentKind::mc: return "mc";
    case ExperimentKind::oracle: return "oracle";
  }
  return "unknown";
}

ExperimentConfig parse_config(const json& j) {
  const Section root(j, "", {"experiment", "seed", "dataset", "model", "loss", "ascent", "minimax", "eval", "curves",
                             "oracle"});
  ExperimentConfig c;
  const std::string kind = root.choice("experiment", "train", {"train", "ablate", "theory", "mc", "oracle"});
  c.kind = kind == "train"    ? ExperimentKind::train
           : kind == "ablate" ? ExperimentKind::ablate
           : kind == "theory" ? ExperimentKind::theory
           : kind == "mc"     ? ExperimentKind::mc
                              : ExperimentKind::oracle;
  c.seed = root.count("seed", 0);
  const bool needs_data = c.kind == ExperimentKind::train || c.kind == ExperimentKind::ablate ||
                          c.kind == ExperimentKind::oracle;
  if (needs_data || root.has("dataset")) c.dataset = parse_dataset(root);
  c.minimax = parse_minimax(root);
  const Section eval = root.child("eval", {"samples_per_class", "runs"});
  c.eval.samples_per_class = eval.count("samples_per_class", c.eval.samples_per_class);
  c.eval.runs = eval.count("runs", c.eval.runs);
  require(c.eval.runs >= 1, eval.field("runs"), "must be at least 1");
  require(c.eval.samples_per_class >= 1, eval.field("samples_per_class"), "must be at least 1");
  c.curves = parse_curves(root, c.kind);
  c.oracle = parse_oracle(root);
  c.oracle.seed = derive_seed(c.seed, 0x6f7261636c65);
  if (c.minimax.worst_count > c.dataset.classes && c.dataset.source != DatasetConfig::Source::csv) {
    throw ConfigError("ascent.worst_count", "exceeds the number of classes");
  }
  if (c.kind == ExperimentKind::oracle) {
    require(c.dataset.source != DatasetConfig::Source::csv, "dataset.source", "oracle needs a mixture dataset");
  }
  return c;
}

std::vector<std::string_view> preset_names() {
  return {"cifar10-lt", "cifar10-step", "cifar100-lt", "cifar100-step", "synthetic"};
}

nlohmann::json preset_config(std::string_view name) {
  // Synthetic stand-ins for the CIFAR profiles keep K, the imbalance shape
  // and the loss settings; circle radii keep neighbouring means ~1.24 apart.
  if (name == "cifar10-lt") return table_preset(10, 2.0, "long_tail", 5000, 2.25, 1.25, 0.15, 3);
  if (name == "cifar10-step") return table_preset(10, 2.0, "step", 5000, 2.25, 1.5, 0.2, 1);
  if (name == "cifar100-lt") return table_preset(100, 19.7, "long_tail", 500, 1.375, 0.75, 0.05, 10);
  if (name == "cifar100-step") return table_preset(100, 19.7, "step", 500, 0.875, 0.5, 0.05, 10);
  if (name == "synthetic") {
    json j = table_preset(10, 2.0, "step", 4000, 1.0, 1.0, 0.0, 1);
    j["experiment"] = "ablate";
    j["eval"]["runs"] = 5;
    return j;
  }
  std::vector<std::string> names;
  for (auto n : preset_names()) names.emplace_back(n);
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "'; allowed: " + join(names));
}

RunSeeds seeds_for_run(std::uint64_t master, std::size_t run) {
  const std::uint64_t base = derive_seed(master, run);
  return {derive_seed(base, 1),
          derive_seed(base, 2),
          {derive_seed(base, 3), derive_seed(base, 4), derive_seed(base, 5), derive_seed(base, 6)}};
}

std::optional<MixtureSpec> mixture_of(const DatasetConfig& d) {
  switch (d.source) {
    case DatasetConfig::Source::circle: return MixtureSpec::circle(d.classes, d.radius);
    case DatasetConfig::Source::line: return MixtureSpec::line(d.centers, d.variance);
    case DatasetConfig::Source::csv: return std::nullopt;
  }
  return std::nullopt;
}

std::vector<std::size_t> training_counts(const DatasetConfig& d) {
  if (!d.counts.empty()) return d.counts;
  if (!d.imbalance) throw ConfigError("dataset.counts", "give either counts or an imbalance profile");
  return make_imbalance_counts(*d.imbalance, d.classes);
}

LabeledDataset build_training_set(const DatasetConfig& d, std::uint64_t seed) {
  if (d.source == DatasetConfig::Source::csv) return load_csv_dataset(d.path, {d.header});
  const std::vector<std::size_t> counts = training_counts(d);
  return sample_mixture(*mixture_of(d), counts, seed);
}

std::optional<LabeledDataset> build_eval_set(const DatasetConfig& d, std::size_t per_class, std::uint64_t seed) {
  if (d.source == DatasetConfig::Source::csv) {
    if (d.eval_path.empty()) return std::nullopt;
    return load_csv_dataset(d.eval_path, {d.header});
  }
  const std::vector<std::size_t> counts(d.classes, per_class);
  return sample_mixture(*mixture_of(d), counts, seed);
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CellOutcome run_cell(const ExperimentConfig& config, const MinimaxConfig& minimax,
                     const std::optional<std::filesystem::path>& dir) {
  CellOutcome cell{minimax.loss, minimax.ascent, {}, 0.0, 0.0, 0.0};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < config.eval.runs; ++r) {
    const RunSeeds seeds = seeds_for_run(config.seed, r);
    const LabeledDataset train = build_training_set(config.dataset, seeds.data);
    const std::optional<LabeledDataset> eval = build_eval_set(config.dataset, config.eval.samples_per_class, seeds.eval);
    MinimaxConfig mc = minimax;
    mc.seeds = seeds.minimax;

    RunOutcome out;
    out.run = r;
    out.report = run_minimax(mc, train, eval ? &*eval : nullptr);
    if (out.report.eval_accuracies) {
      out.worst = worst_class_accuracy(*out.report.eval_accuracies);
      out.worst_class_prior = out.report.final_prior[out.worst->cls];
      out.balanced = balanced_accuracy(*out.report.eval_accuracies);
    }
    if (dir) {
      const auto run_dir = *dir / ("run_" + std::to_string(r));
      std::filesystem::create_directories(run_dir);
      save_checkpoint(run_dir / "checkpoint.bin", out.report.params,
                      {{"config_hash", config.config_hash}, {"run", r}, {"seeds", {{"data", seeds.data},
                                                                                   {"eval", seeds.eval},
                                                                                   {"split", mc.seeds.split},
                                                                                   {"init", mc.seeds.init},
                                                                                   {"shuffle", mc.seeds.shuffle},
                                                                                   {"ties", mc.seeds.ties}}}});
      write_run_report(run_dir / "report.jsonl", out.report, "checkpoint.bin");
      write_trajectory_csv(run_dir / "trajectory.csv", out.report.epochs, train.class_count());
    }
    if (out.worst) {
      rows.push_back({std::to_string(r), std::to_string(out.worst->cls + 1), format_double(out.worst->accuracy),
                      format_double(out.worst_class_prior), format_double(out.balanced)});
    }
    cell.runs.push_back(std::move(out));
  }
  if (cell.runs.front().worst) {
    std::vector<double> w, p, b;
    for (const RunOutcome& o : cell.runs) {
      w.push_back(o.worst->accuracy);
      p.push_back(o.worst_class_prior);
      b.push_back(o.balanced);
    }
    cell.median_worst_accuracy = median(w);
    cell.median_worst_prior = median(p);
    cell.median_balanced = median(b);
  }
  if (dir) {
    write_text_csv(*dir / "runs.csv",
                   {"run", "worst_class", "worst_class_accuracy", "worst_class_prior", "balanced_accuracy"}, rows);
  }
  return cell;
}

std::vector<CellOutcome> run_ablation(const ExperimentConfig& config, const std::optional<std::filesystem::path>& dir) {
  std::vector<CellOutcome> cells;
  std::vector<std::vector<std::string>> rows;
  for (const MinimaxConfig& mc : swap_components(config.minimax)) {
    const std::string name = std::string(loss_variant_name(mc.loss)) + "_" + std::string(ascent_method_name(mc.ascent));
    std::optional<std::filesystem::path> cell_dir;
    if (dir) cell_dir = *dir / name;
    cells.push_back(run_cell(config, mc, cell_dir));
    const CellOutcome& c = cells.back();
    rows.push_back({std::string(loss_variant_name(c.loss)), std::string(ascent_method_name(c.ascent)),
                    format_double(c.median_worst_accuracy), format_double(c.median_worst_prior),
                    format_double(c.median_balanced), std::to_string(c.runs.size())});
  }
  if (dir) {
    write_text_csv(*dir / "comparison.csv",
                   {"loss", "ascent", "median_worst_class_accuracy", "median_worst_class_prior",
                    "median_balanced_accuracy", "runs"},
                   rows);
  }
  return cells;
}

void write_theory_curves(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const CurveConfig& c = config.curves;
  std::vector<std::vector<double>> find_rows;
  for (std::size_t n : c.samples) {
    const double v = prob_find_worst(c.error_vector, c.worst_count, n);
    find_rows.push_back({static_cast<double>(n), v, v, v});
  }
  const std::vector<std::string> header{"N", "value", "ci_low", "ci_high"};
  write_csv(dir / "find_worst.csv", header, find_rows);

  const std::vector<double> probs = c.mse_probabilities.empty() ? c.error_vector : c.mse_probabilities;
  std::vector<std::vector<double>> mse_rows;
  for (double p : probs) {
    for (std::size_t n : c.samples) {
      const double v = ega_estimate_mse(p, n, c.mse_start);
      mse_rows.push_back({p, static_cast<double>(n), v, v, v});
    }
  }
  const std::vector<std::string> mse_header{"P", "N", "value", "ci_low", "ci_high"};
  write_csv(dir / "mse.csv", mse_header, mse_rows);
}

void write_mc_curves(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const CurveConfig& c = config.curves;
  std::vector<std::vector<double>> find_rows;
  for (std::size_t n : c.samples) {
    const double bound = 1.0 - prob_find_worst(c.error_vector, c.worst_count, n);
    const FailureEstimate f = mc_worst_class_failure(c.error_vector, c.worst_count, n, c.trials,
                                                     derive_seed(config.seed, n), c.threads);
    find_rows.push_back({static_cast<double>(n), bound, f.failure, f.ci.low, f.ci.high});
  }
  const std::vector<std::string> header{"N", "theory_value", "mc_value", "ci_low", "ci_high"};
  write_csv(dir / "find_worst_failure.csv", header, find_rows);

  const std::vector<double> probs = c.mse_probabilities.empty() ? c.error_vector : c.mse_probabilities;
  std::vector<std::vector<double>> mse_rows;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    for (std::size_t n : c.samples) {
      const double exact = ega_estimate_mse(probs[i], n, c.mse_start);
      const MseEstimate m = mc_ega_mse(probs[i], n, c.trials, derive_seed(derive_seed(config.seed, 1000 + i), n),
                                       c.threads);
      mse_rows.push_back({probs[i], static_cast<double>(n), exact, m.mse, m.mse - kZ95 * m.std_error,
                          m.mse + kZ95 * m.std_error});
    }
  }
  const std::vector<std::string> mse_header{"P", "N", "theory_value", "mc_value", "ci_low", "ci_high"};
  write_csv(dir / "mse_mc.csv", mse_header, mse_rows);
}

void write_oracle_result(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const MixtureSpec spec = *mixture_of(config.dataset);
  const AdversarialResult best = adversarial_prior_search(spec, config.oracle);
  const BayesRisks risks = bayes_class_risks(spec, best.prior, config.oracle.mc_samples, config.oracle.seed);
  const Prior pi_train = Prior::from_counts(training_counts(config.dataset));
  const double train_risk = bayes_total_risk(spec, pi_train, config.oracle.mc_samples, config.oracle.seed);
  const auto vec = [](const Prior& p) { return std::vector<double>(p.values().begin(), p.values().end()); };
  write_json(dir / "adversarial.json", {{"prior", vec(best.prior)},
                                         {"risk", best.risk},
                                         {"converged", best.converged},
                                         {"evaluations", best.evaluations},
                                         {"exact", risks.exact},
                                         {"class_risks", risks.risks.estimates},
                                         {"std_errors", risks.std_errors},
                                         {"pi_train", vec(pi_train)},
                                         {"pi_train_risk", train_risk}});
  std::vector<std::vector<double>> rows;
  for (std::size_t y = 0; y < best.prior.size(); ++y) {
    rows.push_back({static_cast<double>(y + 1), best.prior[y], risks.risks.estimates[y], risks.std_errors[y]});
  }
  const std::vector<std::string> header{"class", "prior", "risk", "std_error"};
  write_csv(dir / "adversarial_prior.csv", header, rows);
}

void export_report(const std::filesystem::path& report_jsonl, const std::filesystem::path& dir) {
  std::ifstream in(report_jsonl);
  if (!in) throw std::runtime_error("cannot open " + report_jsonl.string());
  std::vector<std::vector<double>> rows;
  std::optional<json> summary;
  std::size_t k = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      if (j.at("record") == "summary") {
        summary = j;
        continue;
      }
      const auto prior = j.at("prior").get<std::vector<double>>();
      const auto risks = j.at("prior_risks").get<std::vector<double>>();
      k = prior.size();
      const auto worst = static_cast<std::size_t>(std::max_element(risks.begin(), risks.end()) - risks.begin());
      std::vector<double> row{j.at("epoch").get<double>()};
      row.insert(row.end(), prior.begin(), prior.end());
      row.push_back(static_cast<double>(worst + 1));
      row.push_back(risks.at(worst));
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw std::runtime_error(report_jsonl.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!summary) throw std::runtime_error(report_jsonl.string() + ": no summary record");
  if (k == 0) k = summary->at("final_prior").size();
  std::vector<std::string> header{"epoch"};
  for (std::size_t y = 1; y <= k; ++y) header.push_back("pi_" + std::to_string(y));
  header.push_back("worst_class");
  header.push_back("worst_risk");
  write_csv(dir / "trajectory.csv", header, rows);

  std::vector<std::vector<double>> srows;
  const auto final_prior = summary->at("final_prior").get<std::vector<double>>();
  const auto pi_train = summary->at("pi_train").get<std::vector<double>>();
  std::vector<double> acc(k, std::nan(""));
  if (summary->contains("eval")) acc = summary->at("eval").at("class_accuracy").get<std::vector<double>>();
  for (std::size_t y = 0; y < k; ++y) srows.push_back({static_cast<double>(y + 1), pi_train[y], final_prior[y], acc[y]});
  const std::vector<std::string> sheader{"class", "pi_train", "final_prior", "eval_accuracy"};
  write_csv(dir / "summary.csv", sheader, srows);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json error_record(const std::exception& e) {
  json j{{"status", "error"}, {"message", e.what()}};
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    j["kind"] = "config";
    j["field"] = ce->field();
  } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
    j["kind"] = "invalid_argument";
  } else if (dynamic_cast<const std::domain_error*>(&e)) {
    j["kind"] = "numerical";
  } else {
    j["kind"] = "runtime";
  }
  return j;
}

std::filesystem::path run_experiment(const nlohmann::json& config, const std::filesystem::path& out_base) {
  ExperimentConfig cfg = parse_config(config);
  const std::string stamp = timestamp_utc();
  std::filesystem::create_directories(out_base);
  std::filesystem::path dir = out_base / (std::string(experiment_name(cfg.kind)) + "-" + stamp);
  for (int i = 2; std::filesystem::exists(dir); ++i) {
    dir = out_base / (std::string(experiment_name(cfg.kind)) + "-" + stamp + "-" + std::to_string(i));
  }
  std::filesystem::create_directories(dir);

  const std::string canonical = config.dump();
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical);
  cfg.config_hash = hash.str();
  json seeds = json::array();
  for (std::size_t r = 0; r < cfg.eval.runs; ++r) {
    const RunSeeds s = seeds_for_run(cfg.seed, r);
    seeds.push_back({{"run", r},
                     {"data", s.data},
                     {"eval", s.eval},
                     {"split", s.minimax.split},
                     {"init", s.minimax.init},
                     {"shuffle", s.minimax.shuffle},
                     {"ties", s.minimax.ties}});
  }
  write_json(dir / "manifest.json", {{"experiment", experiment_name(cfg.kind)},
                                      {"version", TLA_VERSION},
                                      {"created_utc", stamp},
                                      {"config_hash", hash.str()},
                                      {"master_seed", cfg.seed},
                                      {"run_seeds", seeds},
                                      {"config", config}});
  try {
    switch (cfg.kind) {
      case ExperimentKind::train: run_cell(cfg, cfg.minimax, dir); break;
      case ExperimentKind::ablate: run_ablation(cfg, dir); break;
      case ExperimentKind::theory: write_theory_curves(cfg, dir); break;
      case ExperimentKind::mc:
        write_theory_curves(cfg, dir);
        write_mc_curves(cfg, dir);
        break;
      case ExperimentKind::oracle: write_oracle_result(cfg, dir); break;
    }
  } catch (const std::exception& e) {
    json record = error_record(e);
    record["status"] = "failed";
    record["artifact_dir"] = dir.string();
    write_json(dir / "failure.json", record);
    throw ExperimentFailure(dir, e.what());
  }
  return dir;
}

}  // namespace tla
