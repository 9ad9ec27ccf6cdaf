#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deferlab/model.hpp"
#include "deferlab/synth_suites.hpp"
#include "deferlab/trainer.hpp"

namespace deferlab::io {

// Shortest-safe round-trip text for a double: 17 significant digits, '.'
// decimal point, independent of the global locale.
std::string format_double(double v);

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// One row per sample: split, index, x_*, y, m_*, region, sector, eta_*, alpha_*.
std::string dataset_csv_header(const SuiteSpec& spec);
void append_dataset_csv(std::string& out, const LabeledDataset& data);
std::string dataset_csv(const SuiteData& data);

nlohmann::json spec_to_json(const SuiteSpec& spec);
SuiteSpec spec_from_json(const nlohmann::json& j);

// Parses a dataset CSV written by dataset_csv back into the three splits.
SuiteData parse_dataset_csv(std::string_view csv, const SuiteSpec& spec);

nlohmann::json model_to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& j);

std::string history_csv(const TrainHistory& history);

// Minimal RFC 4180-style reader (no embedded newlines in fields).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // -1 when absent
};
CsvTable parse_csv(std::string_view text);

}  // namespace deferlab::io
