#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Alkali species data for the full-structure model: fine-structure levels
// with hyperfine splittings, decay rates, branching ratios, reduced dipole
// matrix elements and the assignment of Zeeman states to the diamond roles.
// Loaded from versioned JSON files; see data/cesium.json for the schema.
namespace diamond {

class AtomDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kAtomSchemaVersion = 1;

// Angular momenta are stored doubled so half-integers are exact.
struct FineLevel {
  std::string id;  // e.g. "6P3/2"
  int n = 0;
  int l = 0;
  int two_j = 0;
  std::vector<int> two_f;  // ascending
};

struct ZeemanState {
  std::string level;
  int two_f = 0;
  int two_m = 0;

  double f() const { return 0.5 * two_f; }
  double m() const { return 0.5 * two_m; }
  // Throws AtomDataError unless |m| <= F and F + m is an integer.
  void validate() const;
  friend bool operator==(const ZeemanState&, const ZeemanState&) = default;
  friend auto operator<=>(const ZeemanState&, const ZeemanState&) = default;
};

std::string to_string(const ZeemanState& s);

// Polarisation q = m_upper - m_lower of each role transition.
struct RolePolarizations {
  int omega1 = 0;
  int omega_e = 0;
  int cavity = 0;
  int omega2 = 0;
};

// Zeeman states playing |0>, |1>, |e1>, |e2>, |e3>. The transitions are
// |0> -> |e1> (Omega_1), |e1> -> |e2> (Omega_e), |e2> -> |e3> (cavity) and
// |e3> -> |0> (Omega_2).
struct RoleAssignment {
  std::string name;
  ZeemanState ground0, ground1, e1, e2, e3;
  RolePolarizations polarizations;
};

struct AtomSpec {
  int schema_version = kAtomSchemaVersion;
  std::string data_version;
  std::string species;
  int two_i = 0;
  // Decay rate of the level that sets the unit of all model rates.
  double reference_gamma_2pi_mhz = 0.0;
  std::vector<FineLevel> levels;
  // Hyperfine shift from the fine-structure centroid, keyed by level id and 2F.
  std::map<std::string, std::map<int, double>> splittings_mhz;
  std::map<std::string, double> gammas_2pi_mhz;
  // Fine-structure branching: upper id -> (lower id -> fraction).
  std::map<std::string, std::map<std::string, double>> branching;
  // Keyed "lower-upper" as in the data file.
  std::map<std::string, double> reduced_dipoles_ea0;
  std::map<std::string, double> wavelengths_nm;
  std::vector<RoleAssignment> roles;
  std::map<std::string, std::string> provenance;

  const FineLevel& level(const std::string& id) const;
  bool has_level(const std::string& id) const;
  const RoleAssignment& role(const std::string& name) const;
  double nuclear_spin() const { return 0.5 * two_i; }
  // Decay rate of a fine-structure level in units of the reference rate.
  double gamma(const std::string& id) const;
  // Hyperfine shift of (level, F) in units of the reference rate.
  double shift(const std::string& id, int two_f) const;
  double reduced_dipole(const std::string& lower, const std::string& upper) const;
  double wavelength_nm(const std::string& lower, const std::string& upper) const;
  // Every Zeeman state of a fine-structure level, ordered by F then m.
  std::vector<ZeemanState> zeeman_states(const std::string& id) const;

  // Cross-checks all references; throws AtomDataError naming the field.
  void validate() const;
};

AtomSpec parse_atom_spec(const std::string& json_text);
AtomSpec load_atom_spec(const std::string& path);
// "cesium" or "rubidium" from the bundled data directory.
AtomSpec bundled_atom_spec(const std::string& species);
std::string bundled_data_path(const std::string& species);

}  // namespace diamond
