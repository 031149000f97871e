#include "tla/report.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tla/metrics.hpp"

namespace tla {
namespace {

constexpr std::array<char, 8> kMagic = {'T', 'L', 'A', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

template <class T>
void put_le(std::ostream& out, T v) {
  if constexpr (sizeof(T) == 8 && std::is_floating_point_v<T>) {
    put_le(out, std::bit_cast<std::uint64_t>(v));
  } else {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <class T>
T get_le(std::istream& in) {
  if constexpr (std::is_floating_point_v<T>) {
    return std::bit_cast<double>(get_le<std::uint64_t>(in));
  } else {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      const int c = in.get();
      if (c == EOF) throw std::runtime_error("checkpoint: truncated file");
      v |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
}

nlohmann::json accuracies_json(const std::vector<double>& acc) {
  const WorstClass w = worst_class_accuracy(acc);
  return {{"class_accuracy", acc},
          {"worst_class", w.cls + 1},
          {"worst_class_accuracy", w.accuracy},
          {"balanced_accuracy", balanced_accuracy(acc)}};
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, std::span<const std::string> header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("write_csv: row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, std::span<const EpochRecord> epochs,
                          std::size_t class_count) {
  std::vector<std::string> header{"epoch"};
  for (std::size_t y = 1; y <= class_count; ++y) header.push_back("pi_" + std::to_string(y));
  header.push_back("worst_class");
  header.push_back("worst_risk");
  std::vector<std::vector<double>> rows;
  for (const EpochRecord& r : epochs) {
    if (r.prior.size() != class_count) throw std::invalid_argument("write_trajectory_csv: prior length differs from K");
    std::vector<double> row{static_cast<double>(r.epoch)};
    row.insert(row.end(), r.prior.values().begin(), r.prior.values().end());
    const ClassIndex worst = r.prior_risks.worst();
    row.push_back(static_cast<double>(worst + 1));
    row.push_back(r.prior_risks.estimates[worst]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

nlohmann::json epoch_record_json(const EpochRecord& r) {
  nlohmann::json j{{"record", "epoch"},
                   {"epoch", r.epoch},
                   {"phase", phase_name(r.phase)},
                   {"mean_loss", r.mean_loss},
                   {"prior", std::vector<double>(r.prior.values().begin(), r.prior.values().end())},
                   {"prior_risks", r.prior_risks.estimates},
                   {"prior_counts", r.prior_risks.counts}};
  if (r.eval_accuracies) j["eval"] = accuracies_json(*r.eval_accuracies);
  return j;
}

nlohmann::json run_summary_json(const RunReport& report, const std::string& checkpoint) {
  const auto vec = [](const Prior& p) { return std::vector<double>(p.values().begin(), p.values().end()); };
  nlohmann::json j{{"record", "summary"},
                   {"epochs", report.epochs.size()},
                   {"pi_train", vec(report.pi_train)},
                   {"final_prior", vec(report.final_prior)},
                   {"checkpoint", checkpoint}};
  if (report.eval_accuracies) {
    j["eval"] = accuracies_json(*report.eval_accuracies);
    j["worst_class_prior"] = report.final_prior[worst_class_accuracy(*report.eval_accuracies).cls];
  }
  return j;
}

void write_run_report(const std::filesystem::path& path, const RunReport& report, const std::string& checkpoint) {
  std::ofstream out = open_out(path);
  for (const EpochRecord& r : report.epochs) out << epoch_record_json(r).dump() << '\n';
  out << run_summary_json(report, checkpoint).dump() << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const nlohmann::json& metadata) {
  nlohmann::json header{
      {"architecture", params.architecture.kind == Architecture::Kind::linear ? "linear" : "mlp"},
      {"hidden_width", params.architecture.hidden_width},
      {"input_dim", params.input_dim},
      {"class_count", params.class_count},
      {"layers", nlohmann::json::array()},
      {"metadata", metadata}};
  for (const Layer& l : params.layers) header["layers"].push_back({l.weights.rows(), l.weights.cols()});
  const std::string text = header.dump();

  std::ofstream out = open_out(path, std::ios::binary);
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Layer& l : params.layers) {
    for (double v : l.weights.values()) put_le(out, v);
    for (double v : l.bias) put_le(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

namespace {

nlohmann::json read_header(std::istream& in, const std::filesystem::path& path) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const auto length = get_le<std::uint32_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  return nlohmann::json::parse(text);
}

}  // namespace

nlohmann::json checkpoint_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_header(in, path).value("metadata", nlohmann::json::object());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const nlohmann::json header = read_header(in, path);

  ModelParams p;
  const std::string arch = header.at("architecture").get<std::string>();
  p.architecture = arch == "linear" ? Architecture::linear()
                                    : Architecture::mlp(header.at("hidden_width").get<std::size_t>());
  p.input_dim = header.at("input_dim").get<std::size_t>();
  p.class_count = header.at("class_count").get<std::size_t>();
  for (const auto& shape : header.at("layers")) {
    const auto rows = shape.at(0).get<std::size_t>();
    const auto cols = shape.at(1).get<std::size_t>();
    Layer l{Matrix(rows, cols), std::vector<double>(cols)};
    for (double& v : l.weights.values()) v = get_le<double>(in);
    for (double& v : l.bias) v = get_le<double>(in);
    p.layers.push_back(std::move(l));
  }
  if (in.peek() != EOF) throw std::runtime_error("checkpoint: trailing bytes");
  return p;
}

}  // namespace tla
