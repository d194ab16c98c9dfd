#include "diamond/result_table.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace diamond {

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  if (r.ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, r.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return csv_field(std::get<std::string>(c));
}

}  // namespace

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument("result row has " + std::to_string(row.size()) + " cells for " +
                                std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

std::size_t ResultTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("no column '" + name + "'");
}

double ResultTable::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows.at(row).at(column(name));
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  throw std::invalid_argument("column '" + name + "' is not numeric");
}

std::string ResultTable::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_field(columns[i]);
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
    out += '\n';
  }
  return out;
}

std::string code_version() { return DIAMOND_VERSION; }

std::string write_results(const std::string& dir, const std::string& stem,
                          const ResultTable& table, const RunMetadata& meta) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  const fs::path csv_path = fs::path(dir) / (stem + ".csv");
  const fs::path json_path = fs::path(dir) / (stem + ".json");

  std::ofstream csv(csv_path, std::ios::binary);
  csv << table.csv();
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());

  nlohmann::json j;
  j["experiment"] = meta.experiment;
  j["tier"] = meta.tier;
  j["config_hash"] = meta.config_hash;
  j["config"] = nlohmann::json::parse(meta.config_json);
  j["code_version"] = meta.code_version;
  j["data_version"] = meta.data_version;
  j["seed"] = meta.seed;
  j["jobs"] = meta.jobs;
  j["wall_time_s"] = meta.wall_time_s;
  j["exit_code"] = meta.exit_code;
  j["budget_exhausted"] = table.budget_exhausted;
  j["columns"] = table.columns;
  j["row_count"] = table.rows.size();
  j["csv"] = csv_path.filename().string();
  j["notes"] = table.notes;
  j["warnings"] = table.warnings;
  std::ofstream side(json_path, std::ios::binary);
  side << j.dump(2) << '\n';
  if (!side) throw std::runtime_error("cannot write " + json_path.string());
  return csv_path.string();
}

}  // namespace diamond
