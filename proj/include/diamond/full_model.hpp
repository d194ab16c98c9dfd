#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "diamond/atomic_data.hpp"
#include "diamond/diamond_model.hpp"
#include "diamond/optimizer.hpp"
#include "diamond/quantum_core.hpp"

// Diamond scheme on the full hyperfine and Zeeman structure of an alkali
// atom. The four role manifolds (ground, e1, e2, e3) are modeled with all
// their Zeeman sublevels; drives and the cavity mode couple every
// dipole-allowed pair of the addressed transition, weighted by the field's
// polarization mix. Rates are in units of the atom's reference decay rate.
namespace diamond {

// Relative dipole amplitude <upper| d_q |lower> / <J_u||d||J_l> * sqrt(2 J_u + 1)
// for q = m_upper - m_lower, so that the squared amplitudes from one upper
// state to all states of a lower fine-structure level sum to 1 over q.
// Zero when a selection rule forbids the transition; levels that are not
// dipole connected (|dL| != 1 or |dJ| > 1) also give zero and set `notice`.
double dipole_amplitude(const AtomSpec& atom, const ZeemanState& lower, const ZeemanState& upper,
                        int q, std::string* notice = nullptr);

// Intensity fractions of the pi, sigma+ and sigma- components of a field,
// with optional phases of the sigma components relative to pi (radians).
struct PolarizationMix {
  double pi = 1.0;
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;
  double phase_plus = 0.0;
  double phase_minus = 0.0;

  // `purity` in the component q_intended, the rest split equally between
  // the other two.
  static PolarizationMix with_purity(double purity, int q_intended = 0);
  double fraction(int q) const;
  // Throws InvariantError unless fractions are >= 0 and sum to 1 within 1e-12.
  void validate() const;
};

struct FieldConfig {
  // Coupling on the role transition for a field of 100% purity (gamma units).
  double amplitude = 0.0;
  PolarizationMix mix{};
};

// Square pulses as in the generic model: Omega_1 on [0, t1], Omega_2 on
// [t1, t2], Omega_e and the cavity coupling g always on.
struct DriveConfig {
  FieldConfig omega1, omega_e, omega2, cavity;
  Detunings detunings{};
  double t1 = 0.0;
  double t2 = 0.0;
  // End of the Omega_2 pulse when it stops before t2; 0 means t2.
  double omega2_off = 0.0;

  double omega2_end() const { return omega2_off > 0.0 ? omega2_off : t2; }
  void validate() const;
};

struct FieldMixes {
  PolarizationMix omega1{}, omega_e{}, omega2{}, cavity{};

  // The same purity for every field, each relative to its role polarization.
  static FieldMixes uniform(double purity, const RolePolarizations& q);
};

// Amplitudes, g, t1, t2 and detunings from generic-model params; the generic
// rates (gammas, kappa) are not used.
DriveConfig drive_config(const DiamondParams& params, const FieldMixes& mixes);

enum class DecayHandling {
  // Spontaneous decays land in the modeled lower sublevels; channels to
  // levels outside the model are absorbing.
  retained,
  // Every spontaneous decay is absorbing (worst case, as in the generic model).
  strict_dump,
};

struct FullModelOptions {
  std::string role = "clock";
  // Include every hyperfine level of the four role manifolds; otherwise only
  // the F levels that carry a role.
  bool off_resonant_partners = true;
  DecayHandling decays = DecayHandling::retained;
};

// Atom x {no photon, cavity photon, fiber photon}. Cavity loss is absorbing.
class FullModel {
 public:
  enum Sector { empty = 0, cavity_photon = 1, fiber_photon = 2 };

  FullModel(const AtomSpec& atom, const DriveConfig& drives, double kappa_f, double kappa_l,
            const FullModelOptions& options = {});

  Index dim() const { return static_cast<Index>(3 * atom_states_.size()); }
  Index atom_count() const { return static_cast<Index>(atom_states_.size()); }
  const std::vector<ZeemanState>& atom_states() const { return atom_states_; }
  bool contains(const ZeemanState& s) const;
  // Throws DimensionError for states outside the model.
  Index index(const ZeemanState& s, Sector sector = empty) const;

  const RoleAssignment& role() const { return role_; }
  const Hamiltonian& hamiltonian() const { return hamiltonian_; }
  const std::vector<LindbladTerm>& terms() const { return terms_; }
  std::size_t fiber_term() const { return fiber_term_; }
  double kappa_f() const { return kappa_f_; }
  double kappa_l() const { return kappa_l_; }
  double t1() const { return t1_; }
  double t2() const { return t2_; }
  double omega2_end() const { return omega2_end_; }
  // Total spontaneous rate out of each atomic state summed over all
  // channels (modeled and absorbing).
  double decay_rate(const ZeemanState& s) const;

 private:
  RoleAssignment role_;
  std::vector<ZeemanState> atom_states_;
  std::vector<double> frame_energy_;
  Hamiltonian hamiltonian_;
  std::vector<LindbladTerm> terms_;
  std::size_t fiber_term_ = 0;
  double kappa_f_ = 0.0, kappa_l_ = 0.0, t1_ = 0.0, t2_ = 0.0, omega2_end_ = 0.0;
};

FullModel build_full_model(const AtomSpec& atom, const DriveConfig& drives, double kappa_f,
                           double kappa_l, const FullModelOptions& options = {});

struct FullCycleOptions {
  double tolerance = 1e-8;
  std::vector<double> trace_times;
  std::size_t quadrature_intervals = 200;  // per pulse segment, no-jump only
};

// One cycle from |0> with no photons. Series: pop_0, pop_1, pop_e1, pop_e2,
// pop_e3 (role states over all sectors), pop_other_atomic, pop_photon,
// fiber_record, absorbed (1 - norm) and norm. The fiber record counts all
// collected photons; rho_0_lambda is the |0>, fiber-photon population.
CycleResult simulate_full_cycle(const FullModel& model, Engine engine = Engine::master,
                                const FullCycleOptions& options = {});

// Generic-model rates matching the atom's role manifolds: gamma1..3 from
// the e1, e2, e3 levels and g for cooperativity C at cavity rate kappa.
DiamondParams full_model_rates(const AtomSpec& atom, const std::string& role, double c,
                               double kappa, double fiber_fraction);

struct FullSearchSettings {
  FullModelOptions model{};
  FullCycleOptions cycle{};
  PulseBounds bounds{};
  OptimizerSettings optimizer{};
  // Engine for the reported fidelity; the search always uses no-jump.
  Engine report_engine = Engine::master;
  // Omega_2 stops this long before t2 (gamma units); 0 keeps it on to t2.
  double omega2_settle = 0.0;
};

struct FullSearch {
  DiamondParams params;
  double fidelity = 0.0;          // with report_engine
  double fidelity_no_jump = 0.0;  // the search objective at the optimum
  std::size_t evaluations = 0;
  bool converged = true;
};

// Optimises the pulses of `start` (see optimize_pulses) for the full model.
FullSearch optimize_full_pulses(const AtomSpec& atom, const DiamondParams& start,
                                const FieldMixes& mixes, const FullSearchSettings& settings);

struct PurityRow {
  double cooperativity = 0.0;
  FullSearch search;
};

// Optimised fidelity per C with the same purity on all four fields; rows
// sorted by C and computed on `jobs` threads.
std::vector<PurityRow> purity_fidelity_curve(const AtomSpec& atom, double purity,
                                             std::vector<double> c_values, double kappa,
                                             const FullSearchSettings& settings, int jobs = 1);

}  // namespace diamond
