#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "tla/experiment.hpp"
#include "tla/report.hpp"

namespace tla {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

RunReport short_run() {
  MinimaxConfig c;
  c.warmup_epochs = 1;
  c.minimax_epochs = 3;
  c.finetune_epochs = 1;
  c.train.batch_size = 32;
  const LabeledDataset data = sample_mixture(MixtureSpec::circle(3), std::vector<std::size_t>{60, 30, 20}, 1);
  const LabeledDataset eval = sample_mixture(MixtureSpec::circle(3), std::vector<std::size_t>{40, 40, 40}, 2);
  return run_minimax(c, data, &eval);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Csv, HeaderOnlyWhenNoRows) {
  const auto dir = testing::scratch_dir("report_csv");
  const std::vector<std::string> header{"a", "b"};
  write_csv(dir / "empty.csv", header, {});
  EXPECT_EQ(slurp(dir / "empty.csv"), "a,b\n");
  write_csv(dir / "one.csv", header, {{1.0, 0.25}});
  EXPECT_EQ(slurp(dir / "one.csv"), "a,b\n1,0.25\n");
}

TEST(Trajectory, OneRowPerEpochWithKPlusThreeColumns) {
  const RunReport r = short_run();
  const auto dir = testing::scratch_dir("report_traj");
  write_trajectory_csv(dir / "t.csv", r.epochs, 3);
  const auto lines = lines_of(dir / "t.csv");
  ASSERT_EQ(lines.size(), 1 + r.epochs.size());
  EXPECT_EQ(lines[0], "epoch,pi_1,pi_2,pi_3,worst_class,worst_risk");
  for (const std::string& l : lines) EXPECT_EQ(std::count(l.begin(), l.end(), ','), 5);
  write_trajectory_csv(dir / "empty.csv", {}, 3);
  EXPECT_EQ(lines_of(dir / "empty.csv").size(), 1u);
}

TEST(RunReportFile, EpochLinesThenSummary) {
  const RunReport r = short_run();
  const auto dir = testing::scratch_dir("report_jsonl");
  write_run_report(dir / "report.jsonl", r, "checkpoint.bin");
  const auto lines = lines_of(dir / "report.jsonl");
  ASSERT_EQ(lines.size(), r.epochs.size() + 1);
  const auto first = nlohmann::json::parse(lines.front());
  EXPECT_EQ(first.at("record"), "epoch");
  EXPECT_EQ(first.at("phase"), "warmup");
  EXPECT_EQ(first.at("prior").size(), 3u);
  const auto summary = nlohmann::json::parse(lines.back());
  EXPECT_EQ(summary.at("record"), "summary");
  EXPECT_EQ(summary.at("checkpoint"), "checkpoint.bin");
  EXPECT_TRUE(summary.contains("worst_class_prior"));
  EXPECT_EQ(summary.at("final_prior").get<std::vector<double>>(),
            std::vector<double>(r.final_prior.values().begin(), r.final_prior.values().end()));
}

TEST(ExportReport, RebuildsTheTrajectoryBytes) {
  const RunReport r = short_run();
  const auto dir = testing::scratch_dir("report_export");
  write_run_report(dir / "report.jsonl", r, "checkpoint.bin");
  write_trajectory_csv(dir / "direct.csv", r.epochs, 3);
  std::filesystem::create_directories(dir / "out");
  export_report(dir / "report.jsonl", dir / "out");
  EXPECT_EQ(slurp(dir / "out" / "trajectory.csv"), slurp(dir / "direct.csv"));
  EXPECT_EQ(lines_of(dir / "out" / "summary.csv").size(), 4u);
}

TEST(Checkpoint, RoundTripWithMetadata) {
  const auto dir = testing::scratch_dir("report_ckpt");
  for (const Architecture arch : {Architecture::linear(), Architecture::mlp(5)}) {
    const ModelParams p = ModelParams::initialize(arch, 3, 4, 11);
    const nlohmann::json meta{{"config_hash", "abc"}, {"run", 2}};
    save_checkpoint(dir / "c.bin", p, meta);
    EXPECT_EQ(load_checkpoint(dir / "c.bin"), p);
    EXPECT_EQ(checkpoint_metadata(dir / "c.bin"), meta);
  }
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const auto dir = testing::scratch_dir("report_bad");
  const ModelParams p = ModelParams::initialize(Architecture::linear(), 2, 2, 1);
  save_checkpoint(dir / "c.bin", p);
  const std::string bytes = slurp(dir / "c.bin");
  std::ofstream(dir / "magic.bin", std::ios::binary) << "XXXXXXXX" << bytes.substr(8);
  EXPECT_THROW(load_checkpoint(dir / "magic.bin"), std::runtime_error);
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(load_checkpoint(dir / "short.bin"), std::runtime_error);
  std::ofstream(dir / "long.bin", std::ios::binary) << bytes << "extra";
  EXPECT_THROW(load_checkpoint(dir / "long.bin"), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir / "missing.bin"), std::runtime_error);
}

}  // namespace
}  // namespace tla
