#include "diamond/diamond_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace diamond {

void DiamondParams::validate() const {
  const double rates[] = {g, kappa_f, kappa_l, gamma1, gamma2, gamma3, omega1, omega_e, omega2};
  for (double r : rates)
    if (!std::isfinite(r) || r < 0.0) throw InvariantError("diamond rates must be finite and >= 0");
  if (!(kappa() > 0.0)) throw InvariantError("kappa_f + kappa_l must be positive");
  if (!(t1 > 0.0 && t2 > t1) || !std::isfinite(t2))
    throw InvariantError("pulse times must satisfy 0 < t1 < t2");
  if (!std::isfinite(detunings.drive1) || !std::isfinite(detunings.drive_e) ||
      !std::isfinite(detunings.cavity))
    throw InvariantError("detunings must be finite");
}

double omega1_at(const DiamondParams& p, double t) {
  return (t >= 0.0 && t <= p.t1) ? p.omega1 : 0.0;
}

double omega2_at(const DiamondParams& p, double t) {
  return (t >= p.t1 && t <= p.t2) ? p.omega2 : 0.0;
}

std::string level_name(Level level) {
  switch (level) {
    case Level::ground0: return "0";
    case Level::ground1: return "1";
    case Level::e1: return "e1";
    case Level::e2: return "e2";
    case Level::e3: return "e3";
    case Level::d1: return "d1";
    case Level::d2: return "d2";
    case Level::d3: return "d3";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Basis

DiamondSpace::DiamondSpace(int max_photons) : max_photons_(max_photons) {
  if (max_photons < 1) throw DimensionError("photon truncation must be at least 1");
  for (int total = 0; total <= max_photons; ++total)
    for (int lost = 0; lost <= total; ++lost)
      for (int fiber = 0; fiber <= total - lost; ++fiber) {
        const int cavity = total - lost - fiber;
        for (Level a : kAllLevels) states_.push_back({a, cavity, fiber, lost});
      }
}

bool DiamondSpace::contains(Level, int cavity, int fiber, int lost) const {
  return cavity >= 0 && fiber >= 0 && lost >= 0 && cavity + fiber + lost <= max_photons_;
}

Index DiamondSpace::index(Level atom, int cavity, int fiber, int lost) const {
  if (!contains(atom, cavity, fiber, lost))
    throw DimensionError("photon numbers exceed the truncation");
  // Sectors are laid out by total photon number, then lost, then fiber.
  const int total = cavity + fiber + lost;
  Index sector = 0;
  for (int n = 0; n < total; ++n) sector += (n + 1) * (n + 2) / 2;
  for (int l = 0; l < lost; ++l) sector += total - l + 1;
  sector += fiber;
  return sector * static_cast<Index>(kAllLevels.size()) + static_cast<Index>(atom);
}

// ---------------------------------------------------------------------------
// Hamiltonian and dissipators

namespace {

struct HamiltonianParts {
  Operator drive1;   // |e1><0| + h.c. on every photon sector
  Operator drive2;   // |0><e3| + h.c.
  Operator constant;  // Omega_e, cavity coupling and detunings
};

HamiltonianParts hamiltonian_parts(const DiamondParams& p, const DiamondSpace& space) {
  const Index n = space.dim();
  Matrix d1 = Matrix::Zero(n, n), d2 = Matrix::Zero(n, n), c = Matrix::Zero(n, n);
  const double e1 = -p.detunings.drive1;
  const double e2 = e1 - p.detunings.drive_e;
  const double e3 = e2 + p.detunings.cavity;
  for (Index i = 0; i < n; ++i) {
    const auto& s = space.state(i);
    if (s.atom != Level::ground0) continue;
    const Index g0 = i;
    const Index ie1 = space.index(Level::e1, s.cavity, s.fiber, s.lost);
    const Index ie2 = space.index(Level::e2, s.cavity, s.fiber, s.lost);
    const Index ie3 = space.index(Level::e3, s.cavity, s.fiber, s.lost);
    d1(ie1, g0) = 1.0;
    d1(g0, ie1) = 1.0;
    d2(g0, ie3) = 1.0;
    d2(ie3, g0) = 1.0;
    c(ie2, ie1) = p.omega_e;
    c(ie1, ie2) = p.omega_e;
    c(ie1, ie1) = e1;
    c(ie2, ie2) = e2;
    c(ie3, ie3) = e3;
    if (space.contains(Level::e3, s.cavity + 1, s.fiber, s.lost)) {
      const Index up = space.index(Level::e3, s.cavity + 1, s.fiber, s.lost);
      const double amp = p.g * std::sqrt(static_cast<double>(s.cavity + 1));
      c(up, ie2) = amp;
      c(ie2, up) = amp;
    }
  }
  return {Operator::hermitian(std::move(d1)), Operator::hermitian(std::move(d2)),
          Operator::hermitian(std::move(c))};
}

}  // namespace

Operator build_hamiltonian(const DiamondParams& params, double t, const DiamondSpace& space) {
  if (t < 0.0) throw std::invalid_argument("build_hamiltonian: t must be >= 0");
  const auto parts = hamiltonian_parts(params, space);
  Operator h = parts.constant;
  h += omega1_at(params, t) * parts.drive1;
  h += omega2_at(params, t) * parts.drive2;
  return Operator::hermitian(h.matrix());
}

Hamiltonian diamond_hamiltonian(const DiamondParams& params, const DiamondSpace& space) {
  auto parts = hamiltonian_parts(params, space);
  Hamiltonian h(space.dim());
  h.add(parts.constant);
  h.add(parts.drive1, [params](double t) { return omega1_at(params, t); });
  h.add(parts.drive2, [params](double t) { return omega2_at(params, t); });
  h.add_breakpoint(params.t1);
  h.add_breakpoint(params.t2);
  return h;
}

std::vector<LindbladTerm> build_lindblads(const DiamondParams& p, const DiamondSpace& space) {
  const Index n = space.dim();
  using Triplet = Eigen::Triplet<Complex>;
  std::vector<Triplet> l1, l2, l3, lf, ll;
  for (Index i = 0; i < n; ++i) {
    const auto& s = space.state(i);
    switch (s.atom) {
      case Level::e1:
        l1.emplace_back(space.index(Level::d1, s.cavity, s.fiber, s.lost), i, std::sqrt(p.gamma1));
        break;
      case Level::e2:
        l2.emplace_back(space.index(Level::d2, s.cavity, s.fiber, s.lost), i, std::sqrt(p.gamma2));
        break;
      case Level::e3:
        l3.emplace_back(space.index(Level::d3, s.cavity, s.fiber, s.lost), i, std::sqrt(p.gamma3));
        break;
      default:
        break;
    }
    if (s.cavity > 0) {
      const double root_n = std::sqrt(static_cast<double>(s.cavity));
      lf.emplace_back(space.index(s.atom, s.cavity - 1, s.fiber + 1, s.lost), i,
                      std::sqrt(p.kappa_f) * root_n);
      ll.emplace_back(space.index(s.atom, s.cavity - 1, s.fiber, s.lost + 1), i,
                      std::sqrt(p.kappa_l) * root_n);
    }
  }
  auto make = [n](const std::vector<Triplet>& t) {
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.prune(Complex(0.0));
    m.makeCompressed();
    return m;
  };
  std::vector<LindbladTerm> terms;
  terms.emplace_back(make(l1), "gamma1");
  terms.emplace_back(make(l2), "gamma2");
  terms.emplace_back(make(l3), "gamma3");
  terms.emplace_back(make(lf), "fiber");
  terms.emplace_back(make(ll), "loss");
  return terms;
}

// ---------------------------------------------------------------------------
// One cycle

namespace {

std::vector<double> output_grid(const DiamondParams& p, const std::vector<double>& extra) {
  std::vector<double> grid = {0.0, p.t1, p.t2};
  for (double t : extra)
    if (t > 0.0 && t < p.t2) grid.push_back(t);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

bool is_dump(Level a) { return a == Level::d1 || a == Level::d2 || a == Level::d3; }

void append_populations(CycleResult& out, const DiamondSpace& space, const Eigen::VectorXd& pop) {
  double p0 = 0, pe1 = 0, pe2 = 0, pe3 = 0, dump = 0, photon = 0, fib = 0, lost = 0, norm = 0;
  for (Index i = 0; i < space.dim(); ++i) {
    const auto& s = space.state(i);
    const double w = pop(i);
    norm += w;
    photon += s.cavity * w;
    if (s.fiber > 0) fib += w;
    if (s.lost > 0) lost += w;
    switch (s.atom) {
      case Level::ground0: p0 += w; break;
      case Level::e1: pe1 += w; break;
      case Level::e2: pe2 += w; break;
      case Level::e3: pe3 += w; break;
      default: if (is_dump(s.atom)) dump += w; break;
    }
  }
  auto& m = out.populations;
  m["pop_0"].push_back(p0);
  m["pop_e1"].push_back(pe1);
  m["pop_e2"].push_back(pe2);
  m["pop_e3"].push_back(pe3);
  m["pop_dump"].push_back(dump);
  m["pop_photon"].push_back(photon);
  m["fiber_record"].push_back(fib);
  m["loss_record"].push_back(lost);
  m["norm"].push_back(norm);
}

CycleResult run_master(const DiamondParams& p, const DiamondSpace& space, const CycleOptions& o) {
  const auto h = diamond_hamiltonian(p, space);
  const auto terms = build_lindblads(p, space);
  IntegratorOptions opt;
  opt.tolerance = o.tolerance;
  opt.record_steps = false;
  CycleResult out;
  out.times = output_grid(p, o.trace_times);
  const auto traj =
      evolve_master(DensityMatrix::basis_state(space.dim(), space.index(Level::ground0)), h, terms,
                    out.times, opt);
  for (const auto& rho : traj.states) append_populations(out, space, rho.populations());
  const auto final_pops = traj.final_state().populations();
  out.rho_0_lambda = final_pops(space.index(Level::ground0, 0, 1, 0));
  double fib = 0.0;
  for (Index i = 0; i < space.dim(); ++i)
    if (space.state(i).fiber > 0) fib += final_pops(i);
  out.success_probability = std::clamp(fib, 0.0, 1.0);
  return out;
}

// The fiber jump is always the first jump: after any other jump the atom
// cannot emit a photon within the cycle.
CycleResult run_no_jump(const DiamondParams& p, const DiamondSpace& space, const CycleOptions& o) {
  const auto h = diamond_hamiltonian(p, space);
  const auto terms = build_lindblads(p, space);
  IntegratorOptions opt;
  opt.tolerance = o.tolerance;
  CycleResult out;
  out.times = output_grid(p, o.trace_times);
  const auto r = first_jump_transfer(StateVector::basis_state(space.dim(), space.index(Level::ground0)),
                                     h, terms, 3, space.index(Level::ground0, 0, 1, 0),
                                     {0.0, p.t1, p.t2}, o.quadrature_intervals, out.times, opt);
  out.rho_0_lambda = r.transfer;
  out.success_probability = std::clamp(r.jump_probability, 0.0, 1.0);
  for (const auto& psi : r.forward.states) append_populations(out, space, psi.populations());
  return out;
}

}  // namespace

CycleResult simulate_cycle(const DiamondParams& params, Engine engine, const CycleOptions& options) {
  params.validate();
  const DiamondSpace space(options.max_photons);
  CycleResult out = engine == Engine::master ? run_master(params, space, options)
                                             : run_no_jump(params, space, options);
  out.rho_0_lambda = std::max(out.rho_0_lambda, 0.0);
  out.fidelity = params.kappa_f > 0.0
                     ? std::clamp(params.kappa() * out.rho_0_lambda / params.kappa_f, 0.0, 1.0)
                     : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Cooperativity and sweeps

double cooperativity(double g, double kappa, double gamma2, double gamma3) {
  if (kappa == 0.0 || gamma2 + gamma3 == 0.0)
    throw std::domain_error("cooperativity: kappa and gamma2 + gamma3 must be nonzero");
  return g * g / (kappa * (gamma2 + gamma3));
}

double coupling_for_cooperativity(double c, double kappa, double gamma2, double gamma3) {
  if (c < 0.0) throw std::domain_error("cooperativity must be >= 0");
  if (kappa == 0.0 || gamma2 + gamma3 == 0.0)
    throw std::domain_error("cooperativity: kappa and gamma2 + gamma3 must be nonzero");
  return std::sqrt(c * kappa * (gamma2 + gamma3));
}

DiamondParams scaled_start(double c, const RateRatios& rates, double a) {
  if (!(c > 0.0)) throw std::invalid_argument("cooperativity must be positive");
  DiamondParams p;
  p.gamma1 = rates.gamma1;
  p.gamma2 = rates.gamma2;
  p.gamma3 = rates.gamma3;
  p.kappa_f = rates.fiber_fraction * rates.kappa;
  p.kappa_l = rates.kappa - p.kappa_f;
  p.g = coupling_for_cooperativity(c, rates.kappa, rates.gamma2, rates.gamma3);
  p.omega1 = a * c * rates.gamma1;
  p.omega_e = c * rates.gamma2;
  p.t1 = std::max(std::log(c), 1.0) / (c * rates.gamma1);
  p.omega2 = 4.0 * c * rates.gamma3;
  p.t2 = p.t1 + M_PI / (2.0 * p.omega2);
  return p;
}

std::vector<SweepRow> sweep_error_vs_cooperativity(std::vector<double> c_values,
                                                   const RateRatios& rates,
                                                   const PulseOptimizer& optimizer,
                                                   const CycleOptions& cycle, int jobs) {
  for (double c : c_values)
    if (!(c > 0.0)) throw std::invalid_argument("cooperativity values must be positive");
  std::sort(c_values.begin(), c_values.end());
  std::vector<SweepRow> rows(c_values.size());
  std::vector<std::exception_ptr> errors(c_values.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < c_values.size(); i = next++) {
      try {
        const auto start = scaled_start(c_values[i], rates);
        const FidelityObjective objective = [&cycle](const DiamondParams& p) {
          return simulate_cycle(p, Engine::master, cycle).fidelity;
        };
        const auto best = optimizer(start, objective);
        rows[i] = {c_values[i], 1.0 - best.fidelity, best.params, best.evaluations, best.converged};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < std::min(n_threads, c_values.size()); ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

}  // namespace diamond
