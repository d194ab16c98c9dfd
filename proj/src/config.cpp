#include "diamond/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "json_fields.hpp"

namespace diamond {

namespace {

using nlohmann::json;
using Fields = detail::JsonFields<ConfigError>;

[[noreturn]] void fail(const std::string& where, const std::string& what) { Fields::fail(where, what); }

bool is_full(Tier t) { return t != Tier::generic; }

// Preset pulses of the generic time trace (C = 10, kappa = 2000 gamma),
// close to the optimised pulses at that point.
PulseSettings generic_trace_pulses() {
  PulseSettings p;
  p.omega1 = 28.1;
  p.omega_e = 40.5;
  p.omega2 = 100.0;
  p.t1 = 0.0999;
  p.t2 = p.t1 + 0.5 * M_PI / p.omega2;
  return p;
}

std::set<std::string> allowed_keys(ExperimentKind kind, Tier tier) {
  std::set<std::string> keys = {"experiment", "tier", "seed", "jobs", "tolerance"};
  auto add = [&](std::initializer_list<const char*> more) { keys.insert(more.begin(), more.end()); };
  const auto full_model_keys = {"role", "decays", "off_resonant_partners", "atom_data"};
  switch (kind) {
    case ExperimentKind::error_scaling:
      add({"cooperativities", "rates", "optimizer", "bounds"});
      if (is_full(tier)) add(full_model_keys);
      else add({"alpha"});
      break;
    case ExperimentKind::time_trace:
      add({"cooperativity", "rates", "pulse", "optimize", "trace_points", "engine", "optimizer",
           "bounds"});
      if (is_full(tier)) {
        add(full_model_keys);
        add({"purity"});
      }
      break;
    case ExperimentKind::purity_sweep:
      add({"cooperativities", "purities", "rates", "optimizer", "bounds"});
      add(full_model_keys);
      break;
    case ExperimentKind::combined:
      add({"cooperativities", "field_purities", "pulses_ns", "cavity", "rates", "optimizer",
           "bounds"});
      add(full_model_keys);
      break;
    case ExperimentKind::cavity_params:
      add({"cavity", "distances_nm", "role", "atom_data"});
      break;
  }
  return keys;
}

double fraction(const json& v, const std::string& where) {
  const double x = Fields::number(v, where);
  if (!(x > 0.0 && x <= 1.0)) fail(where, "must lie in (0, 1]");
  return x;
}

void read_rates(const json& v, ExperimentConfig& c) {
  const bool full = is_full(c.tier);
  if (full)
    Fields::check_keys(v, "rates", {}, {"kappa", "fiber_fraction"});
  else
    Fields::check_keys(v, "rates", {}, {"kappa", "fiber_fraction", "gamma1", "gamma2", "gamma3"});
  if (v.contains("kappa")) {
    c.rates.kappa = Fields::positive(v["kappa"], "rates.kappa");
    c.kappa_given = true;
  }
  if (v.contains("fiber_fraction")) c.rates.fiber_fraction = fraction(v["fiber_fraction"], "rates.fiber_fraction");
  if (v.contains("gamma1")) c.rates.gamma1 = Fields::number(v["gamma1"], "rates.gamma1");
  if (v.contains("gamma2")) c.rates.gamma2 = Fields::number(v["gamma2"], "rates.gamma2");
  if (v.contains("gamma3")) c.rates.gamma3 = Fields::number(v["gamma3"], "rates.gamma3");
}

void read_optimizer(const json& v, OptimizerSettings& o) {
  Fields::check_keys(v, "optimizer", {},
                     {"max_evaluations", "grid_points", "restarts", "initial_step", "x_tolerance",
                      "f_tolerance"});
  auto count = [&](const char* key, long long min) {
    const std::string where = std::string("optimizer.") + key;
    const auto n = Fields::integer(v[key], where);
    if (n < min) fail(where, "must be at least " + std::to_string(min));
    return n;
  };
  if (v.contains("max_evaluations")) o.max_evaluations = static_cast<std::size_t>(count("max_evaluations", 1));
  if (v.contains("grid_points")) o.grid_points = static_cast<int>(count("grid_points", 1));
  if (v.contains("restarts")) o.restarts = static_cast<int>(count("restarts", 0));
  if (v.contains("initial_step")) o.initial_step = Fields::positive(v["initial_step"], "optimizer.initial_step");
  if (v.contains("x_tolerance")) o.x_tolerance = Fields::positive(v["x_tolerance"], "optimizer.x_tolerance");
  if (v.contains("f_tolerance")) o.f_tolerance = Fields::positive(v["f_tolerance"], "optimizer.f_tolerance");
}

void read_bounds(const json& v, PulseBounds& b) {
  Fields::check_keys(v, "bounds", {},
                     {"omega1_factor", "omega_e_factor", "t1_factor", "omega2_c", "area",
                      "fixed_times"});
  auto range = [&](const char* key, double& lo, double& hi) {
    if (!v.contains(key)) return;
    const std::string where = std::string("bounds.") + key;
    const auto r = Fields::numbers(v[key], where);
    if (r.size() != 2) fail(where, "expected [low, high]");
    if (!(r[0] > 0.0 && r[0] < r[1])) fail(where, "expected 0 < low < high");
    lo = r[0];
    hi = r[1];
  };
  range("omega1_factor", b.omega1_factor_low, b.omega1_factor_high);
  range("omega_e_factor", b.omega_e_factor_low, b.omega_e_factor_high);
  range("t1_factor", b.t1_factor_low, b.t1_factor_high);
  range("omega2_c", b.omega2_c_low, b.omega2_c_high);
  range("area", b.area_low, b.area_high);
  if (v.contains("fixed_times")) b.fixed_times = Fields::boolean(v["fixed_times"], "bounds.fixed_times");
}

PulseSettings read_pulse(const json& v) {
  Fields::check_keys(v, "pulse", {"omega1", "omega_e", "omega2", "t1", "t2"});
  PulseSettings p;
  p.omega1 = Fields::number(v["omega1"], "pulse.omega1");
  p.omega_e = Fields::number(v["omega_e"], "pulse.omega_e");
  p.omega2 = Fields::number(v["omega2"], "pulse.omega2");
  p.t1 = Fields::positive(v["t1"], "pulse.t1");
  p.t2 = Fields::positive(v["t2"], "pulse.t2");
  return p;
}

void read_cavity(const json& v, CavityOverrides& c) {
  Fields::check_keys(v, "cavity", {},
                     {"wavelength_nm", "quality_factor", "mode_volume", "refractive_index",
                      "decay_length_nm", "normalization"});
  auto opt = [&](const char* key, std::optional<double>& out) {
    if (v.contains(key)) out = Fields::positive(v[key], std::string("cavity.") + key);
  };
  opt("wavelength_nm", c.wavelength_nm);
  opt("quality_factor", c.quality_factor);
  opt("mode_volume", c.mode_volume);
  opt("refractive_index", c.refractive_index);
  opt("decay_length_nm", c.decay_length_nm);
  if (v.contains("normalization")) {
    const auto n = Fields::text(v["normalization"], "cavity.normalization");
    if (n == "dielectric") c.normalization = FieldNormalization::dielectric;
    else if (n == "vacuum") c.normalization = FieldNormalization::vacuum;
    else fail("cavity.normalization", "expected \"dielectric\" or \"vacuum\"");
  }
}

std::string normalization_name(FieldNormalization n) {
  return n == FieldNormalization::dielectric ? "dielectric" : "vacuum";
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::error_scaling: return "error-scaling";
    case ExperimentKind::time_trace: return "time-trace";
    case ExperimentKind::purity_sweep: return "purity-sweep";
    case ExperimentKind::combined: return "combined";
    case ExperimentKind::cavity_params: return "cavity-params";
  }
  return "?";
}

std::string to_string(Tier tier) {
  switch (tier) {
    case Tier::generic: return "generic";
    case Tier::full_cesium: return "full-cesium";
    case Tier::full_rubidium: return "full-rubidium";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::error_scaling, ExperimentKind::time_trace,
                 ExperimentKind::purity_sweep, ExperimentKind::combined,
                 ExperimentKind::cavity_params})
    if (to_string(k) == name) return k;
  throw ConfigError("experiment: unknown experiment '" + name + "'");
}

Tier parse_tier(const std::string& name) {
  for (auto t : {Tier::generic, Tier::full_cesium, Tier::full_rubidium})
    if (to_string(t) == name) return t;
  throw ConfigError("tier: unknown tier '" + name + "'");
}

std::string tier_species(Tier tier) {
  switch (tier) {
    case Tier::full_cesium: return "cesium";
    case Tier::full_rubidium: return "rubidium";
    case Tier::generic: break;
  }
  throw ConfigError("tier: the generic tier has no atomic species");
}

ExperimentConfig default_config(ExperimentKind kind, Tier tier) {
  ExperimentConfig c;
  c.experiment = kind;
  c.tier = tier;
  c.tolerance = is_full(tier) ? 1e-8 : 1e-9;
  if (is_full(tier)) {
    c.role = tier == Tier::full_cesium ? "clock" : "stretched-1530";
    c.rates.kappa = 200.0;
    c.optimizer.max_evaluations = 300;
    c.optimizer.grid_points = 2;
  }
  switch (kind) {
    case ExperimentKind::error_scaling:
      c.cooperativities = is_full(tier) ? std::vector<double>{3, 10, 30, 100}
                                        : std::vector<double>{10, 30, 100, 300, 1000};
      break;
    case ExperimentKind::time_trace:
      if (is_full(tier)) {
        c.optimize = true;
      } else {
        c.pulse = generic_trace_pulses();
      }
      break;
    case ExperimentKind::purity_sweep:
      c.cooperativities = {3, 10, 30, 100};
      c.purities = {1.0, 0.9, 0.8};
      break;
    case ExperimentKind::combined:
      c.cooperativities = {35, 15};
      c.field_purities = {0.9389, 0.9779, 0.9499, 0.9766};
      c.bounds.fixed_times = true;
      c.optimizer.max_evaluations = 200;
      c.optimizer.grid_points = 1;
      break;
    case ExperimentKind::cavity_params:
      c.distances_nm = {0, 50, 100, 150, 200, 250, 300};
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  const bool needs_full = experiment == ExperimentKind::purity_sweep ||
                          experiment == ExperimentKind::combined ||
                          experiment == ExperimentKind::cavity_params;
  if (needs_full && !is_full(tier))
    fail("tier", to_string(experiment) + " needs full-cesium or full-rubidium");
  if (jobs < 1) fail("jobs", "must be at least 1");
  if (!(tolerance >= 1e-12 && tolerance <= 1e-4)) fail("tolerance", "must lie in [1e-12, 1e-4]");
  if (!(rates.kappa > 0.0)) fail("rates.kappa", "must be positive");
  if (!(rates.fiber_fraction > 0.0 && rates.fiber_fraction <= 1.0))
    fail("rates.fiber_fraction", "must lie in (0, 1]");
  if (rates.gamma1 < 0.0 || rates.gamma2 < 0.0 || rates.gamma3 < 0.0)
    fail("rates", "decay rates must be >= 0");
  if (!(rates.gamma2 + rates.gamma3 > 0.0)) fail("rates", "gamma2 + gamma3 must be positive");
  for (std::size_t i = 0; i < cooperativities.size(); ++i)
    if (!(cooperativities[i] > 0.0))
      fail("cooperativities[" + std::to_string(i) + "]", "must be positive");
  for (std::size_t i = 0; i < purities.size(); ++i)
    if (!(purities[i] > 0.0 && purities[i] <= 1.0))
      fail("purities[" + std::to_string(i) + "]", "must lie in (0, 1]");
  if (!(cooperativity > 0.0)) fail("cooperativity", "must be positive");
  if (!(purity > 0.0 && purity <= 1.0)) fail("purity", "must lie in (0, 1]");
  if (trace_points < 2) fail("trace_points", "must be at least 2");
  if (pulse) {
    if (pulse->omega1 < 0.0 || pulse->omega_e < 0.0 || pulse->omega2 < 0.0)
      fail("pulse", "amplitudes must be >= 0");
    if (!(pulse->t1 > 0.0 && pulse->t1 < pulse->t2)) fail("pulse", "expected 0 < t1 < t2");
  }
  if (experiment == ExperimentKind::time_trace && !pulse && !optimize)
    fail("pulse", "give explicit pulses or set \"optimize\": true");
  for (double p : {field_purities.omega1, field_purities.omega_e, field_purities.omega2,
                   field_purities.cavity})
    if (!(p > 0.0 && p <= 1.0)) fail("field_purities", "purities must lie in (0, 1]");
  if (!(pulses_ns.omega1_ns > 0.0)) fail("pulses_ns.omega1", "must be positive");
  if (!(pulses_ns.omega2_ns > 0.0)) fail("pulses_ns.omega2", "must be positive");
  if (pulses_ns.settle_ns < 0.0) fail("pulses_ns.settle", "must be >= 0");
  for (std::size_t i = 0; i < distances_nm.size(); ++i)
    if (!(distances_nm[i] >= 0.0)) fail("distances_nm[" + std::to_string(i) + "]", "must be >= 0");
  if (experiment == ExperimentKind::cavity_params && distances_nm.empty())
    fail("distances_nm", "must not be empty");
  if ((experiment == ExperimentKind::error_scaling || experiment == ExperimentKind::purity_sweep ||
       experiment == ExperimentKind::combined) &&
      cooperativities.empty())
    fail("cooperativities", "must not be empty");
  if (experiment == ExperimentKind::purity_sweep && purities.empty())
    fail("purities", "must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text, ExperimentKind kind,
                              std::optional<Tier> tier_override) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("config", "expected a JSON object");
  if (root.contains("experiment")) {
    const auto named = parse_experiment_kind(Fields::text(root["experiment"], "experiment"));
    if (named != kind)
      fail("experiment", "config is for '" + to_string(named) + "', not '" + to_string(kind) + "'");
  }
  Tier tier = kind == ExperimentKind::error_scaling || kind == ExperimentKind::time_trace
                  ? Tier::generic
                  : Tier::full_cesium;
  if (root.contains("tier")) tier = parse_tier(Fields::text(root["tier"], "tier"));
  if (tier_override) tier = *tier_override;

  ExperimentConfig c = default_config(kind, tier);
  const auto allowed = allowed_keys(kind, tier);
  for (auto it = root.begin(); it != root.end(); ++it)
    if (!allowed.count(it.key()))
      fail(it.key(), "unknown field for " + to_string(kind) + " on the " + to_string(tier) + " tier");

  if (root.contains("seed")) {
    const auto s = Fields::integer(root["seed"], "seed");
    if (s < 0) fail("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (root.contains("jobs")) c.jobs = static_cast<int>(Fields::integer(root["jobs"], "jobs"));
  if (root.contains("tolerance")) c.tolerance = Fields::positive(root["tolerance"], "tolerance");
  if (root.contains("rates")) read_rates(root["rates"], c);
  if (root.contains("optimizer")) read_optimizer(root["optimizer"], c.optimizer);
  if (root.contains("bounds")) read_bounds(root["bounds"], c.bounds);
  if (root.contains("cooperativities"))
    c.cooperativities = Fields::numbers(root["cooperativities"], "cooperativities");
  if (root.contains("purities")) c.purities = Fields::numbers(root["purities"], "purities");
  if (root.contains("role")) c.role = Fields::text(root["role"], "role");
  if (root.contains("decays")) {
    const auto d = Fields::text(root["decays"], "decays");
    if (d == "retained") c.decays = DecayHandling::retained;
    else if (d == "strict-dump") c.decays = DecayHandling::strict_dump;
    else fail("decays", "expected \"retained\" or \"strict-dump\"");
  }
  if (root.contains("off_resonant_partners"))
    c.off_resonant_partners = Fields::boolean(root["off_resonant_partners"], "off_resonant_partners");
  if (root.contains("atom_data")) c.atom_data = Fields::text(root["atom_data"], "atom_data");
  if (root.contains("alpha")) {
    const auto a = Fields::text(root["alpha"], "alpha");
    if (a == "consistent") c.alpha = analytic::AlphaDenominator::consistent;
    else if (a == "verbatim") c.alpha = analytic::AlphaDenominator::verbatim;
    else fail("alpha", "expected \"consistent\" or \"verbatim\"");
  }
  if (root.contains("cooperativity")) c.cooperativity = Fields::positive(root["cooperativity"], "cooperativity");
  if (root.contains("purity")) c.purity = fraction(root["purity"], "purity");
  if (root.contains("pulse")) c.pulse = read_pulse(root["pulse"]);
  if (root.contains("optimize")) {
    c.optimize = Fields::boolean(root["optimize"], "optimize");
    if (c.optimize && !root.contains("pulse")) c.pulse.reset();
  }
  if (root.contains("trace_points")) {
    const auto n = Fields::integer(root["trace_points"], "trace_points");
    if (n < 2) fail("trace_points", "must be at least 2");
    c.trace_points = static_cast<std::size_t>(n);
  }
  if (root.contains("engine")) {
    const auto e = Fields::text(root["engine"], "engine");
    if (e == "master") c.engine = Engine::master;
    else if (e == "no-jump") c.engine = Engine::no_jump;
    else fail("engine", "expected \"master\" or \"no-jump\"");
  }
  if (root.contains("field_purities")) {
    const auto& v = root["field_purities"];
    Fields::check_keys(v, "field_purities", {}, {"omega1", "omega_e", "omega2", "cavity"});
    if (v.contains("omega1")) c.field_purities.omega1 = fraction(v["omega1"], "field_purities.omega1");
    if (v.contains("omega_e")) c.field_purities.omega_e = fraction(v["omega_e"], "field_purities.omega_e");
    if (v.contains("omega2")) c.field_purities.omega2 = fraction(v["omega2"], "field_purities.omega2");
    if (v.contains("cavity")) c.field_purities.cavity = fraction(v["cavity"], "field_purities.cavity");
  }
  if (root.contains("pulses_ns")) {
    const auto& v = root["pulses_ns"];
    Fields::check_keys(v, "pulses_ns", {}, {"omega1", "omega2", "settle"});
    if (v.contains("omega1")) c.pulses_ns.omega1_ns = Fields::positive(v["omega1"], "pulses_ns.omega1");
    if (v.contains("omega2")) c.pulses_ns.omega2_ns = Fields::positive(v["omega2"], "pulses_ns.omega2");
    if (v.contains("settle")) c.pulses_ns.settle_ns = Fields::number(v["settle"], "pulses_ns.settle");
  }
  if (root.contains("cavity")) read_cavity(root["cavity"], c.cavity);
  if (root.contains("distances_nm")) c.distances_nm = Fields::numbers(root["distances_nm"], "distances_nm");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentKind kind,
                             std::optional<Tier> tier) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), kind, tier);
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["tier"] = to_string(c.tier);
  j["seed"] = c.seed;
  j["tolerance"] = c.tolerance;
  j["optimizer"] = {{"max_evaluations", c.optimizer.max_evaluations},
                    {"grid_points", c.optimizer.grid_points},
                    {"restarts", c.optimizer.restarts},
                    {"initial_step", c.optimizer.initial_step},
                    {"x_tolerance", c.optimizer.x_tolerance},
                    {"f_tolerance", c.optimizer.f_tolerance}};
  const auto& b = c.bounds;
  j["bounds"] = {{"omega1_factor", {b.omega1_factor_low, b.omega1_factor_high}},
                 {"omega_e_factor", {b.omega_e_factor_low, b.omega_e_factor_high}},
                 {"t1_factor", {b.t1_factor_low, b.t1_factor_high}},
                 {"omega2_c", {b.omega2_c_low, b.omega2_c_high}},
                 {"area", {b.area_low, b.area_high}},
                 {"fixed_times", b.fixed_times}};
  j["rates"] = {{"kappa", c.rates.kappa},         {"kappa_given", c.kappa_given},
                {"fiber_fraction", c.rates.fiber_fraction}, {"gamma1", c.rates.gamma1},
                {"gamma2", c.rates.gamma2},       {"gamma3", c.rates.gamma3}};
  j["cooperativities"] = c.cooperativities;
  j["purities"] = c.purities;
  j["role"] = c.role;
  j["decays"] = c.decays == DecayHandling::retained ? "retained" : "strict-dump";
  j["off_resonant_partners"] = c.off_resonant_partners;
  j["atom_data"] = c.atom_data ? json(*c.atom_data) : json(nullptr);
  j["alpha"] = c.alpha == analytic::AlphaDenominator::consistent ? "consistent" : "verbatim";
  j["cooperativity"] = c.cooperativity;
  j["purity"] = c.purity;
  if (c.pulse)
    j["pulse"] = {{"omega1", c.pulse->omega1}, {"omega_e", c.pulse->omega_e},
                  {"omega2", c.pulse->omega2}, {"t1", c.pulse->t1}, {"t2", c.pulse->t2}};
  else
    j["pulse"] = nullptr;
  j["optimize"] = c.optimize;
  j["trace_points"] = c.trace_points;
  j["engine"] = c.engine == Engine::master ? "master" : "no-jump";
  j["field_purities"] = {{"omega1", c.field_purities.omega1}, {"omega_e", c.field_purities.omega_e},
                         {"omega2", c.field_purities.omega2}, {"cavity", c.field_purities.cavity}};
  j["pulses_ns"] = {{"omega1", c.pulses_ns.omega1_ns}, {"omega2", c.pulses_ns.omega2_ns},
                    {"settle", c.pulses_ns.settle_ns}};
  json cav = {{"normalization", normalization_name(c.cavity.normalization)}};
  auto put = [&](const char* key, const std::optional<double>& v) {
    cav[key] = v ? json(*v) : json(nullptr);
  };
  put("wavelength_nm", c.cavity.wavelength_nm);
  put("quality_factor", c.cavity.quality_factor);
  put("mode_volume", c.cavity.mode_volume);
  put("refractive_index", c.cavity.refractive_index);
  put("decay_length_nm", c.cavity.decay_length_nm);
  j["cavity"] = cav;
  j["distances_nm"] = c.distances_nm;
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = canonical_json(config);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i)
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

}  // namespace diamond
