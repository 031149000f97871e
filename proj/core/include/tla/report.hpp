#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tla/minimax.hpp"
#include "tla/model.hpp"

namespace tla {

// 17 significant digits, '.' decimal separator.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, std::span<const std::string> header,
               const std::vector<std::vector<double>>& rows);

// Columns: epoch, pi_1..pi_K, worst_class (1-based), worst_risk.
void write_trajectory_csv(const std::filesystem::path& path, std::span<const EpochRecord> epochs,
                          std::size_t class_count);

nlohmann::json epoch_record_json(const EpochRecord& r);
// Final prior, accuracies and the checkpoint file name.
nlohmann::json run_summary_json(const RunReport& report, const std::string& checkpoint);
// One line per epoch, then one summary line with "record": "summary".
void write_run_report(const std::filesystem::path& path, const RunReport& report, const std::string& checkpoint);

// Binary layout: "TLACKPT1", u32 version, u32 header length, JSON header,
// then every weight and bias as little-endian float64 in layer order.
// metadata (config hash, seeds) is stored in the header as given.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const nlohmann::json& metadata = nlohmann::json::object());
nlohmann::json checkpoint_metadata(const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace tla
