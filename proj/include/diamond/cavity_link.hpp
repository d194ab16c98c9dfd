#pragma once

#include <map>
#include <string>
#include <utility>

// Cavity design parameters to model rates: kappa from the quality factor,
// the single-photon coupling g from the mode volume and the transition
// dipole, its evanescent decay away from the surface, and the
// critical-coupling split of kappa. Rates come in rad/s and in units of a
// reference decay rate gamma = 2 pi x reference_gamma_2pi_mhz MHz.
namespace diamond {

struct AtomSpec;

// How the vacuum field per photon is normalised: `dielectric` places the
// field maximum inside a medium of the given refractive index,
// E = sqrt(hbar omega / (2 eps0 n^2 V)); `vacuum` drops the n^2.
enum class FieldNormalization { dielectric, vacuum };

struct CavityParams {
  double wavelength_nm = 1360.0;
  double quality_factor = 2e5;
  double mode_volume = 0.7;  // in units of (lambda / n)^3
  double refractive_index = 2.016;
  double dipole_ea0 = 0.0;  // transition dipole of the coupled Zeeman pair
  double surface_distance_nm = 0.0;
  double decay_length_nm = 100.0;  // 1/e length of g outside the surface
  double reference_gamma_2pi_mhz = 3.28;
  FieldNormalization normalization = FieldNormalization::dielectric;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Rate {
  double si = 0.0;  // rad/s
  double gamma_units = 0.0;
};

double si_to_gamma(double rate_si, double reference_gamma_2pi_mhz);
double gamma_to_si(double rate_gamma, double reference_gamma_2pi_mhz);
double mode_volume_m3(const CavityParams& params);

// kappa = omega / Q = 2 pi c / (lambda Q)
Rate kappa_from_q(const CavityParams& params);
// Peak coupling g = d sqrt(omega / (2 hbar eps0 n^2 V)) at the field maximum.
Rate g_from_mode_volume(const CavityParams& params);
// g(z) = g_peak exp(-z / decay_length); throws for z < 0.
Rate g_at_distance(const CavityParams& params, double z_nm);
// (kappa_f, kappa_l) = (kappa / 2, kappa / 2)
std::pair<double, double> critical_split(double kappa);

// Cavity design values from a versioned data file (see data/cavity.json).
// The wavelength, transition dipole and reference rate come from the atomic
// data, so `params` holds the struct defaults for those.
struct CavityDesign {
  std::string data_version;
  CavityParams params;
  std::map<std::string, std::string> provenance;
};

// Throws AtomDataError naming the offending field; unknown keys are rejected.
CavityDesign parse_cavity_design(const std::string& json_text);
CavityDesign load_cavity_design(const std::string& path);
CavityDesign bundled_cavity_design();

// Dipole <e2| d_q |e3> of the role's cavity transition in e a0.
double cavity_transition_dipole_ea0(const AtomSpec& atom, const std::string& role);
// Design values plus the wavelength, dipole and reference rate of the
// role's cavity transition.
CavityParams cavity_params_for(const AtomSpec& atom, const std::string& role,
                               const CavityDesign& design);

}  // namespace diamond
