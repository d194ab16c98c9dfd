#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "diamond/quantum_core.hpp"

// Generic five-level diamond scheme |0> -> |e1> -> |e2> -> |e3> -> |0> with
// one cavity mode on e2 -> e3, square drive pulses and dump levels. All
// rates are in units of a reference decay rate gamma, times in 1/gamma.
namespace diamond {

// Detunings (laser minus atomic frequency). The Omega_2 laser frequency is
// fixed by the four-photon resonance condition, so it carries no free
// detuning of its own.
struct Detunings {
  double drive1 = 0.0;
  double drive_e = 0.0;
  double cavity = 0.0;
};

struct DiamondParams {
  double g = 0.0;
  double kappa_f = 0.0;
  double kappa_l = 0.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma3 = 1.0;
  double omega1 = 0.0;
  double omega_e = 0.0;
  double omega2 = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  Detunings detunings{};

  double kappa() const { return kappa_f + kappa_l; }
  // Throws InvariantError on negative rates, kappa == 0 or !(0 < t1 < t2).
  void validate() const;
};

// Square pulse envelopes.
double omega1_at(const DiamondParams& p, double t);
double omega2_at(const DiamondParams& p, double t);

enum class Level { ground0, ground1, e1, e2, e3, d1, d2, d3 };
inline constexpr std::array<Level, 8> kAllLevels = {Level::ground0, Level::ground1, Level::e1,
                                                    Level::e2,      Level::e3,      Level::d1,
                                                    Level::d2,      Level::d3};
std::string level_name(Level level);

// Atom x cavity Fock state x emitted-photon records. The fiber and loss
// records count photons that left the cavity through kappa_f and kappa_l;
// cavity + fiber + loss photons are truncated at `max_photons`.
class DiamondSpace {
 public:
  struct BasisState {
    Level atom;
    int cavity;
    int fiber;
    int lost;
  };

  explicit DiamondSpace(int max_photons = 1);

  int max_photons() const { return max_photons_; }
  Index dim() const { return static_cast<Index>(states_.size()); }
  // Throws DimensionError when the photon numbers exceed the truncation.
  Index index(Level atom, int cavity = 0, int fiber = 0, int lost = 0) const;
  bool contains(Level atom, int cavity, int fiber, int lost) const;
  const BasisState& state(Index i) const { return states_.at(static_cast<std::size_t>(i)); }

 private:
  int max_photons_;
  std::vector<BasisState> states_;
};

Operator build_hamiltonian(const DiamondParams& params, double t, const DiamondSpace& space);
// Same operator as a piecewise-constant Hamiltonian with breakpoints t1, t2.
Hamiltonian diamond_hamiltonian(const DiamondParams& params, const DiamondSpace& space);

// Five channels, in order: gamma1, gamma2, gamma3 (into the dump levels),
// fiber and loss (cavity decay split by kappa_f / kappa_l, each raising its
// photon record).
std::vector<LindbladTerm> build_lindblads(const DiamondParams& params, const DiamondSpace& space);

enum class Engine { master, no_jump };

struct CycleOptions {
  int max_photons = 1;
  double tolerance = 1e-9;
  // Extra output times for time traces; t1 and t2 are always included.
  std::vector<double> trace_times;
  // Composite Simpson intervals per pulse segment (no-jump estimate only).
  std::size_t quadrature_intervals = 4000;
};

// Named series on the cycle's output grid: pop_0, pop_e1, pop_e2, pop_e3
// (summed over photon sectors), pop_dump, pop_photon (<c^dagger c>),
// fiber_record, loss_record and norm.
struct CycleResult {
  double rho_0_lambda = 0.0;
  double fidelity = 0.0;
  double success_probability = 0.0;
  std::vector<double> times;
  std::map<std::string, std::vector<double>> populations;
};

CycleResult simulate_cycle(const DiamondParams& params, Engine engine = Engine::master,
                           const CycleOptions& options = {});

// C = g^2 / (kappa (gamma2 + gamma3)); throws std::domain_error on zero
// denominators.
double cooperativity(double g, double kappa, double gamma2, double gamma3);
// Inverse: g for a requested cooperativity.
double coupling_for_cooperativity(double c, double kappa, double gamma2, double gamma3);

// Fixed rates of an error-scaling sweep (gamma units).
struct RateRatios {
  double kappa = 2000.0;
  double fiber_fraction = 0.5;  // kappa_f / kappa
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma3 = 1.0;
};

// Params at cooperativity C with drives from the scaling choice
// Omega1 = a C gamma1, Omega_e = C gamma2, gamma1 t1 = ln C / C and a
// pi pulse for the Omega_2 transfer.
DiamondParams scaled_start(double c, const RateRatios& rates, double a = 0.5);

struct PulseSearch {
  DiamondParams params;
  double fidelity = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};
using FidelityObjective = std::function<double(const DiamondParams&)>;
using PulseOptimizer = std::function<PulseSearch(const DiamondParams& start, const FidelityObjective&)>;

struct SweepRow {
  double cooperativity = 0.0;
  double error = 0.0;  // 1 - F
  DiamondParams params;
  std::size_t evaluations = 0;
  bool converged = true;
};

// One optimised row per C (rows sorted by C; duplicates give identical rows).
// Rows are distributed over `jobs` worker threads and merged by index.
std::vector<SweepRow> sweep_error_vs_cooperativity(std::vector<double> c_values,
                                                   const RateRatios& rates,
                                                   const PulseOptimizer& optimizer,
                                                   const CycleOptions& cycle = {}, int jobs = 1);

}  // namespace diamond
