#include "diamond/cavity_link.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/constants/constants.hpp>
#include <json.hpp>

#include "diamond/atomic_data.hpp"
#include "diamond/full_model.hpp"
#include "json_fields.hpp"

namespace diamond {

namespace {

// CODATA 2018
constexpr double kSpeedOfLight = 2.99792458e8;         // m/s
constexpr double kHbar = 1.054571817e-34;              // J s
constexpr double kEpsilon0 = 8.8541878128e-12;         // F/m
constexpr double kAtomicDipole = 8.4783536255e-30;     // e a0 in C m
constexpr double kTwoPi = boost::math::constants::two_pi<double>();

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("cavity parameter ") + name + " must be positive");
}

double angular_frequency(const CavityParams& p) { return kTwoPi * kSpeedOfLight / (p.wavelength_nm * 1e-9); }

Rate make_rate(double si, const CavityParams& p) { return {si, si_to_gamma(si, p.reference_gamma_2pi_mhz)}; }

}  // namespace

void CavityParams::validate() const {
  require_positive(wavelength_nm, "wavelength_nm");
  require_positive(quality_factor, "quality_factor");
  require_positive(mode_volume, "mode_volume");
  require_positive(decay_length_nm, "decay_length_nm");
  require_positive(reference_gamma_2pi_mhz, "reference_gamma_2pi_mhz");
  if (!(refractive_index > 1.0) || !std::isfinite(refractive_index))
    throw std::invalid_argument("cavity parameter refractive_index must exceed 1");
  if (!(dipole_ea0 >= 0.0) || !std::isfinite(dipole_ea0))
    throw std::invalid_argument("cavity parameter dipole_ea0 must be >= 0");
  if (!(surface_distance_nm >= 0.0) || !std::isfinite(surface_distance_nm))
    throw std::invalid_argument("cavity parameter surface_distance_nm must be >= 0");
}

double si_to_gamma(double rate_si, double reference_gamma_2pi_mhz) {
  return rate_si / (kTwoPi * reference_gamma_2pi_mhz * 1e6);
}

double gamma_to_si(double rate_gamma, double reference_gamma_2pi_mhz) {
  return rate_gamma * kTwoPi * reference_gamma_2pi_mhz * 1e6;
}

double mode_volume_m3(const CavityParams& p) {
  const double reduced = p.wavelength_nm * 1e-9 / p.refractive_index;
  return p.mode_volume * reduced * reduced * reduced;
}

Rate kappa_from_q(const CavityParams& p) {
  p.validate();
  return make_rate(angular_frequency(p) / p.quality_factor, p);
}

Rate g_from_mode_volume(const CavityParams& p) {
  p.validate();
  const double n2 = p.normalization == FieldNormalization::dielectric
                        ? p.refractive_index * p.refractive_index
                        : 1.0;
  const double field = std::sqrt(angular_frequency(p) / (2.0 * kHbar * kEpsilon0 * n2 * mode_volume_m3(p)));
  return make_rate(p.dipole_ea0 * kAtomicDipole * field, p);
}

Rate g_at_distance(const CavityParams& p, double z_nm) {
  if (!(z_nm >= 0.0)) throw std::invalid_argument("distance from the surface must be >= 0");
  const Rate peak = g_from_mode_volume(p);
  const double f = std::exp(-z_nm / p.decay_length_nm);
  return {peak.si * f, peak.gamma_units * f};
}

std::pair<double, double> critical_split(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be >= 0");
  return {0.5 * kappa, 0.5 * kappa};
}

CavityDesign parse_cavity_design(const std::string& json_text) {
  using Fields = detail::JsonFields<AtomDataError>;
  using nlohmann::json;
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw AtomDataError(std::string("cavity data is not valid JSON: ") + e.what());
  }
  Fields::check_keys(root, "cavity data",
                     {"schema_version", "data_version", "quality_factor", "mode_volume",
                      "refractive_index", "decay_length_nm"},
                     {"provenance"});
  if (Fields::integer(root["schema_version"], "schema_version") != kAtomSchemaVersion)
    Fields::fail("schema_version", "unsupported version");
  CavityDesign d;
  d.data_version = Fields::text(root["data_version"], "data_version");
  d.params.quality_factor = Fields::positive(root["quality_factor"], "quality_factor");
  d.params.mode_volume = Fields::positive(root["mode_volume"], "mode_volume");
  d.params.refractive_index = Fields::positive(root["refractive_index"], "refractive_index");
  d.params.decay_length_nm = Fields::positive(root["decay_length_nm"], "decay_length_nm");
  if (root.contains("provenance")) {
    const auto& p = root["provenance"];
    if (!p.is_object()) Fields::fail("provenance", "expected an object");
    for (auto it = p.begin(); it != p.end(); ++it)
      d.provenance[it.key()] = Fields::text(it.value(), "provenance." + it.key());
  }
  try {
    d.params.validate();
  } catch (const std::invalid_argument& e) {
    throw AtomDataError(e.what());
  }
  return d;
}

CavityDesign load_cavity_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AtomDataError("cannot open cavity data file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_cavity_design(buf.str());
  } catch (const AtomDataError& e) {
    throw AtomDataError(path + ": " + e.what());
  }
}

CavityDesign bundled_cavity_design() { return load_cavity_design(bundled_data_path("cavity")); }

double cavity_transition_dipole_ea0(const AtomSpec& atom, const std::string& role) {
  const auto& r = atom.role(role);
  const double amp = dipole_amplitude(atom, r.e3, r.e2, r.polarizations.cavity);
  const int two_j_upper = atom.level(r.e2.level).two_j;
  return std::abs(amp) * atom.reduced_dipole(r.e3.level, r.e2.level) / std::sqrt(two_j_upper + 1.0);
}

CavityParams cavity_params_for(const AtomSpec& atom, const std::string& role,
                               const CavityDesign& design) {
  const auto& r = atom.role(role);
  CavityParams p = design.params;
  p.wavelength_nm = atom.wavelength_nm(r.e3.level, r.e2.level);
  p.dipole_ea0 = cavity_transition_dipole_ea0(atom, role);
  p.reference_gamma_2pi_mhz = atom.reference_gamma_2pi_mhz;
  return p;
}

}  // namespace diamond
