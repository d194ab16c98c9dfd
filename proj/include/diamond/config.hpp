#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diamond/analytic.hpp"
#include "diamond/cavity_link.hpp"
#include "diamond/diamond_model.hpp"
#include "diamond/full_model.hpp"
#include "diamond/optimizer.hpp"

// Experiment configuration for the diamond-node runner. A config is a JSON
// object; which keys are accepted depends on the experiment, and unknown or
// misplaced keys are rejected with a message naming the field.
namespace diamond {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { error_scaling, time_trace, purity_sweep, combined, cavity_params };
enum class Tier { generic, full_cesium, full_rubidium };

std::string to_string(ExperimentKind kind);
std::string to_string(Tier tier);
// Throw ConfigError for unknown names.
ExperimentKind parse_experiment_kind(const std::string& name);
Tier parse_tier(const std::string& name);

// Bundled species of a full tier ("cesium" or "rubidium"); throws for generic.
std::string tier_species(Tier tier);

// Explicit square-pulse settings (gamma units) for the time trace.
struct PulseSettings {
  double omega1 = 0.0;
  double omega_e = 0.0;
  double omega2 = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
};

// Purity of each field in its role polarization.
struct FieldPurities {
  double omega1 = 1.0;
  double omega_e = 1.0;
  double omega2 = 1.0;
  double cavity = 1.0;
};

// Lab-time pulse lengths, converted with the atom's reference rate. The
// Omega_2 window is t2 - t1 = omega2 + settle.
struct PulseDurations {
  double omega1_ns = 2.5;
  double omega2_ns = 0.5;
  double settle_ns = 0.0;
};

// Overrides of the bundled cavity design; unset fields keep the data value.
struct CavityOverrides {
  std::optional<double> wavelength_nm, quality_factor, mode_volume, refractive_index,
      decay_length_nm;
  FieldNormalization normalization = FieldNormalization::dielectric;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::error_scaling;
  Tier tier = Tier::generic;
  std::uint64_t seed = 7;
  int jobs = 1;
  double tolerance = 1e-9;  // integrator relative tolerance

  OptimizerSettings optimizer{};
  PulseBounds bounds{};
  // Generic-tier rates; full tiers take gamma1..3 from the atomic data.
  RateRatios rates{};
  // Set when the config names kappa (combined otherwise derives it from Q).
  bool kappa_given = false;

  std::vector<double> cooperativities;
  std::vector<double> purities;

  // Full-tier model options.
  std::string role;
  DecayHandling decays = DecayHandling::retained;
  bool off_resonant_partners = true;
  std::optional<std::string> atom_data;  // path overriding the bundled file

  analytic::AlphaDenominator alpha = analytic::AlphaDenominator::consistent;

  // time-trace
  double cooperativity = 10.0;
  double purity = 1.0;
  std::optional<PulseSettings> pulse;
  bool optimize = false;
  std::size_t trace_points = 200;
  Engine engine = Engine::master;

  // combined
  FieldPurities field_purities{};
  PulseDurations pulses_ns{};

  // cavity-params and combined
  CavityOverrides cavity{};
  std::vector<double> distances_nm;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Defaults of an experiment before any config keys are applied.
ExperimentConfig default_config(ExperimentKind kind, Tier tier);

// `kind` is the experiment named on the command line; a config "experiment"
// key must agree with it. `tier` (when given) overrides the config's tier.
ExperimentConfig parse_config(const std::string& json_text, ExperimentKind kind,
                              std::optional<Tier> tier = std::nullopt);
ExperimentConfig load_config(const std::string& path, ExperimentKind kind,
                             std::optional<Tier> tier = std::nullopt);

// Every setting of the resolved config (defaults filled in) as canonical
// JSON text: sorted keys, no whitespace. `jobs` is left out because it does
// not change results.
std::string canonical_json(const ExperimentConfig& config);
// Hex SHA-256 of canonical_json.
std::string config_hash(const ExperimentConfig& config);

}  // namespace diamond
