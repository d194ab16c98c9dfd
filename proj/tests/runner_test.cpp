#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "diamond/config.hpp"
#include "diamond/diamond_model.hpp"
#include "diamond/experiments.hpp"
#include "diamond/optimizer.hpp"
#include "diamond/result_table.hpp"

using namespace diamond;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text, ExperimentKind kind = ExperimentKind::error_scaling) {
  try {
    parse_config(text, kind).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("diamond_runner_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

// Runs diamond-node with the arguments and returns its exit status.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(DIAMOND_NODE_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

const char* kSmallScaling = R"({"cooperativities": [10], "optimizer": {"max_evaluations": 40, "grid_points": 1}})";

}  // namespace

TEST_CASE("config errors name the offending field") {
  CHECK(config_error(R"({"cooperativites": [10]})").find("cooperativites") != std::string::npos);
  CHECK(config_error(R"({"optimizer": {"max_evals": 3}})").find("max_evals") != std::string::npos);
  CHECK(config_error(R"({"cooperativities": [10, -1]})").find("cooperativities[1]") != std::string::npos);
  CHECK(config_error(R"({"cooperativities": "ten"})").find("cooperativities") != std::string::npos);
  CHECK(config_error(R"({"tolerance": 1})").find("tolerance") != std::string::npos);
  CHECK(config_error(R"({"experiment": "time-trace"})").find("experiment") != std::string::npos);
  CHECK(config_error(R"({"tier": "full-francium"})").find("tier") != std::string::npos);
  CHECK(config_error("[1, 2]").find("object") != std::string::npos);
  CHECK(config_error("{").find("JSON") != std::string::npos);
  CHECK(config_error(R"({"tier": "generic"})", ExperimentKind::purity_sweep).find("tier") != std::string::npos);
  CHECK(config_error("{}", ExperimentKind::purity_sweep).empty());
  CHECK(config_error(R"({"pulse": {"omega1": 1, "omega_e": 1, "omega2": 1, "t1": 2, "t2": 1}})",
                     ExperimentKind::time_trace)
            .find("pulse") != std::string::npos);
  CHECK(config_error(R"({"cooperativities": [10, 30]})").empty());
  CHECK_THROWS_AS(parse_experiment_kind("fig-2a"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json", ExperimentKind::error_scaling), ConfigError);
}

TEST_CASE("config hash identifies the resolved config") {
  const auto a = parse_config(R"({"cooperativities": [10, 30], "seed": 3})", ExperimentKind::error_scaling);
  const auto b = parse_config("{ \"seed\" : 3,\n \"cooperativities\" : [10.0, 30] }", ExperimentKind::error_scaling);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 64);
  auto c = a;
  c.jobs = 4;
  CHECK(config_hash(c) == config_hash(a));
  c.seed = 4;
  CHECK(config_hash(c) != config_hash(a));
  // Defaults are part of the resolved config, so naming them changes nothing.
  const auto d = parse_config(R"({"cooperativities": [10, 30], "seed": 3, "tolerance": 1e-9})",
                              ExperimentKind::error_scaling);
  CHECK(config_hash(d) == config_hash(a));
  CHECK(nlohmann::json::parse(canonical_json(a)).is_object());
}

TEST_CASE("CSV formatting") {
  ResultTable t;
  t.columns = {"x", "label", "n"};
  t.add_row({0.1, std::string("a,b"), std::int64_t{3}});
  t.add_row({1e-300, std::string("say \"hi\""), std::int64_t{-1}});
  CHECK(t.csv() == "x,label,n\n0.1,\"a,b\",3\n1e-300,\"say \"\"hi\"\"\",-1\n");
  CHECK_THROWS_AS(t.add_row({1.0}), std::invalid_argument);
  CHECK(t.number(0, "n") == 3.0);
  CHECK_THROWS_AS(t.number(0, "label"), std::invalid_argument);
  CHECK_THROWS_AS(t.column("missing"), std::out_of_range);
  for (double x : {0.1, 1.0 / 3.0, 2.0e-7, 123456789.125, -5.5})
    CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("optimizer recovers a shifted quadratic deterministically") {
  auto objective = [](const std::vector<double>& x) {
    return -(x[0] - 3.0) * (x[0] - 3.0) - 0.5 * (x[1] + 1.0) * (x[1] + 1.0);
  };
  const Box box{{0.0, -5.0}, {10.0, 5.0}};
  OptimizerSettings s;
  s.seed = 11;
  const auto a = maximize(objective, {8.0, 4.0}, box, s);
  CHECK(std::abs(a.best_x[0] - 3.0) < 1e-3);
  CHECK(std::abs(a.best_x[1] + 1.0) < 1e-3);
  CHECK(a.converged);
  CHECK(a.evaluations <= s.max_evaluations);
  const auto b = maximize(objective, {8.0, 4.0}, box, s);
  CHECK(a.best_x == b.best_x);
  CHECK(a.best_value == b.best_value);
  CHECK(a.evaluations == b.evaluations);

  s.max_evaluations = 5;
  const auto starved = maximize(objective, {8.0, 4.0}, box, s);
  CHECK_FALSE(starved.converged);
  CHECK(starved.evaluations <= 5);

  // Throwing objectives count as -infinity.
  auto partly = [&](const std::vector<double>& x) {
    if (x[0] > 6.0) throw std::runtime_error("outside");
    return objective(x);
  };
  s.max_evaluations = 400;
  CHECK(std::abs(maximize(partly, {5.0, 0.0}, box, s).best_x[0] - 3.0) < 1e-3);
}

TEST_CASE("error scaling at C = 10 reproduces the direct sweep row bit for bit") {
  const auto config = parse_config(kSmallScaling, ExperimentKind::error_scaling);
  const auto table = run_experiment(config);
  REQUIRE(table.rows.size() == 1);

  OptimizerSettings settings = config.optimizer;
  settings.seed = config.seed;
  CycleOptions cycle;
  cycle.tolerance = config.tolerance;
  const auto rows = sweep_error_vs_cooperativity({10.0}, config.rates,
                                                 make_pulse_optimizer(config.bounds, settings), cycle);
  REQUIRE(rows.size() == 1);
  CHECK(table.number(0, "cooperativity") == 10.0);
  CHECK(table.number(0, "error") == rows[0].error);
  CHECK(table.number(0, "omega1") == rows[0].params.omega1);
  CHECK(table.number(0, "omega_e") == rows[0].params.omega_e);
  CHECK(table.number(0, "omega2") == rows[0].params.omega2);
  CHECK(table.number(0, "t1") == rows[0].params.t1);
  CHECK(table.number(0, "t2") == rows[0].params.t2);
  CHECK(table.number(0, "evaluations") == static_cast<double>(rows[0].evaluations));
}

TEST_CASE("time trace: populations, transfer and conservation") {
  const auto config = parse_config("{}", ExperimentKind::time_trace);
  const auto t = run_experiment(config);
  REQUIRE(t.rows.size() >= config.trace_points);
  CHECK(t.number(0, "t") == 0.0);
  CHECK(t.number(0, "pop_0") == 1.0);
  const double t1 = std::stod(t.notes.at("params.t1"));
  double e3_peak = 0.0, e3_at_t1 = 0.0, pop0_at_t1 = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double sum = t.number(i, "pop_0") + t.number(i, "pop_e1") + t.number(i, "pop_e2") +
                       t.number(i, "pop_e3") + t.number(i, "pop_dump");
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    CHECK(std::abs(t.number(i, "norm") - 1.0) <= 1e-6);
    if (t.number(i, "t") <= t1) {
      e3_peak = std::max(e3_peak, t.number(i, "pop_e3"));
      e3_at_t1 = t.number(i, "pop_e3");
      pop0_at_t1 = t.number(i, "pop_0");
    }
  }
  const std::size_t last = t.rows.size() - 1;
  INFO("pop_e3 at t1 " << e3_at_t1 << ", at t2 " << t.number(last, "pop_e3"));
  CHECK(e3_peak > 1e-3);
  CHECK(t.number(last, "pop_e3") < 0.1 * e3_at_t1);
  CHECK(t.number(last, "pop_0") > pop0_at_t1);
  CHECK(t.number(last, "omega2_t") > 0.0);
  CHECK(t.number(0, "omega2_t") == 0.0);
  CHECK(t.number(0, "omega1_t") > 0.0);
  // kappa_f = kappa_l: the two output channels share the photon equally.
  CHECK(std::abs(t.number(last, "fiber_record") - t.number(last, "loss_record")) <= 1e-6);
  CHECK(t.number(last, "fiber_record") + t.number(last, "loss_record") > 0.9);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch_dir("exit_codes");
  const auto out = (dir / "out").string();
  const auto cavity = write_config(dir, "cavity.json", R"({"distances_nm": [0, 100]})");
  CHECK(run_cli("cavity-params --tier full-cesium --config " + cavity.string() + " --out " + out) == 0);
  CHECK(fs::exists(dir / "out" / "cavity-params.csv"));
  CHECK(fs::exists(dir / "out" / "cavity-params.json"));

  const auto unknown = write_config(dir, "unknown.json", R"({"distance": [0]})");
  CHECK(run_cli("cavity-params --tier full-cesium --config " + unknown.string() + " --out " + out) == 2);
  CHECK(run_cli("cavity-params --tier full-cesium --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("cavity-params --tier full-strontium --config " + cavity.string()) == 2);
  CHECK(run_cli("fig-4 --tier full-cesium --config " + cavity.string()) == 2);
  CHECK(run_cli("cavity-params --tier generic --config " + cavity.string()) == 2);

  const auto overflow = write_config(
      dir, "overflow.json", R"({"pulse": {"omega1": 1e308, "omega_e": 40, "omega2": 100, "t1": 0.1, "t2": 0.11}})");
  CHECK(run_cli("time-trace --config " + overflow.string() + " --out " + out) == 3);

  const auto starved = write_config(
      dir, "starved.json", R"({"cooperativities": [10], "optimizer": {"max_evaluations": 5, "grid_points": 1}})");
  const auto starved_out = dir / "starved";
  CHECK(run_cli("error-scaling --config " + starved.string() + " --out " + starved_out.string()) == 4);
  REQUIRE(fs::exists(starved_out / "error-scaling.csv"));
  const auto side = nlohmann::json::parse(read_file(starved_out / "error-scaling.json"));
  CHECK(side["exit_code"] == 4);
  CHECK(side["budget_exhausted"] == true);
  CHECK(side["row_count"] == 1);
  fs::remove_all(dir);
}

TEST_CASE("property: re-runs give byte-identical CSV bodies and matching hashes") {
  const auto dir = scratch_dir("reproducibility");
  const auto cfg = write_config(dir, "scaling.json", kSmallScaling);
  const std::string base = "error-scaling --config " + cfg.string() + " --seed 5 --out ";
  // The small budget may run out (exit 4); the results are written either way.
  const int code = run_cli(base + (dir / "a").string());
  REQUIRE((code == 0 || code == 4));
  REQUIRE(run_cli(base + (dir / "b").string() + " --jobs 2") == code);
  const auto csv_a = read_file(dir / "a" / "error-scaling.csv");
  CHECK_FALSE(csv_a.empty());
  CHECK(csv_a == read_file(dir / "b" / "error-scaling.csv"));
  const auto side_a = nlohmann::json::parse(read_file(dir / "a" / "error-scaling.json"));
  const auto side_b = nlohmann::json::parse(read_file(dir / "b" / "error-scaling.json"));
  CHECK(side_a["config_hash"] == side_b["config_hash"]);
  CHECK(side_a["seed"] == 5);
  auto config = parse_config(kSmallScaling, ExperimentKind::error_scaling);
  config.seed = 5;
  CHECK(side_a["config_hash"] == config_hash(config));
  CHECK(side_a["code_version"] == code_version());

  const auto trace = write_config(dir, "trace.json", "{}");
  REQUIRE(run_cli("time-trace --config " + trace.string() + " --out " + (dir / "c").string()) == 0);
  REQUIRE(run_cli("time-trace --config " + trace.string() + " --out " + (dir / "d").string()) == 0);
  CHECK(read_file(dir / "c" / "time-trace.csv") == read_file(dir / "d" / "time-trace.csv"));
  fs::remove_all(dir);
}
