// diamond-node: runs one experiment from a JSON config and writes
// <out>/<experiment>.csv plus a <experiment>.json metadata sidecar.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 optimizer
// budget exhausted (results are still written).

#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "diamond/atomic_data.hpp"
#include "diamond/config.hpp"
#include "diamond/experiments.hpp"
#include "diamond/quantum_core.hpp"
#include "diamond/result_table.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;
constexpr int kBudgetExhausted = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atom-cavity diamond scheme experiments"};
  std::string experiment, config_path, out_dir = ".", tier_name;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  app.add_option("experiment", experiment, "error-scaling | time-trace | purity-sweep | combined | cavity-params")
      ->required();
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "optimizer seed");
  app.add_option("--tier", tier_name, "generic | full-cesium | full-rubidium")
      ->check(CLI::IsMember({"generic", "full-cesium", "full-rubidium"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  diamond::ExperimentConfig config;
  try {
    const auto kind = diamond::parse_experiment_kind(experiment);
    std::optional<diamond::Tier> tier;
    if (!tier_name.empty()) tier = diamond::parse_tier(tier_name);
    config = diamond::load_config(config_path, kind, tier);
    if (jobs) config.jobs = *jobs;
    if (seed) config.seed = *seed;
    config.validate();
  } catch (const diamond::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  diamond::ResultTable table;
  diamond::RunMetadata meta;
  try {
    table = diamond::run_experiment(config);
    meta.data_version = diamond::data_version(config);
  } catch (const diamond::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const diamond::AtomDataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  meta.experiment = diamond::to_string(config.experiment);
  meta.tier = diamond::to_string(config.tier);
  meta.config_hash = diamond::config_hash(config);
  meta.config_json = diamond::canonical_json(config);
  meta.code_version = diamond::code_version();
  meta.seed = config.seed;
  meta.jobs = config.jobs;
  meta.wall_time_s = wall;
  meta.exit_code = table.budget_exhausted ? kBudgetExhausted : kOk;
  try {
    const auto path = diamond::write_results(out_dir, meta.experiment, table, meta);
    std::cout << path << '\n';
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  for (const auto& w : table.warnings) std::cerr << "warning: " << w << '\n';
  return meta.exit_code;
}
