#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

// Tabular experiment output: a CSV body plus a JSON sidecar with run
// metadata. CSV numbers use the shortest round-trip decimal form, so equal
// results give byte-identical files.
namespace diamond {

using Cell = std::variant<double, std::int64_t, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  // Derived run facts (unit conversions, data provenance) for the sidecar.
  std::map<std::string, std::string> notes;
  // Per-row optimizer and validity warnings.
  std::vector<std::string> warnings;
  bool budget_exhausted = false;

  // Throws std::invalid_argument unless the row matches the column count.
  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  std::string csv() const;
};

std::string format_number(double x);

struct RunMetadata {
  std::string experiment;
  std::string tier;
  std::string config_hash;
  std::string config_json;  // canonical resolved config
  std::string code_version;
  std::string data_version;
  std::uint64_t seed = 0;
  int jobs = 1;
  double wall_time_s = 0.0;
  int exit_code = 0;
};

std::string code_version();

// Writes <dir>/<stem>.csv and <dir>/<stem>.json (creating dir); returns the
// CSV path. Throws std::runtime_error on I/O failure.
std::string write_results(const std::string& dir, const std::string& stem,
                          const ResultTable& table, const RunMetadata& meta);

}  // namespace diamond
