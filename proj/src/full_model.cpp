#include "diamond/full_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <thread>

#include "diamond/wigner.hpp"

namespace diamond {

double dipole_amplitude(const AtomSpec& atom, const ZeemanState& lower, const ZeemanState& upper,
                        int q, std::string* notice) {
  const FineLevel& lo = atom.level(lower.level);
  const FineLevel& up = atom.level(upper.level);
  if (std::abs(lo.l - up.l) != 1 || std::abs(lo.two_j - up.two_j) > 2) {
    if (notice) *notice = lower.level + " and " + upper.level + " are not dipole connected";
    return 0.0;
  }
  if (q < -1 || q > 1 || upper.two_m - lower.two_m != 2 * q) return 0.0;
  const int tjp = up.two_j, tj = lo.two_j, ti = atom.two_i;
  const int tfp = upper.two_f, tf = lower.two_f;
  const double three_j = wigner3j_2(tfp, 2, tf, -upper.two_m, 2 * q, lower.two_m);
  if (three_j == 0.0) return 0.0;
  const double six_j = wigner6j_2(tjp, tfp, ti, tf, tj, 2);
  if (six_j == 0.0) return 0.0;
  const int phase = (tfp - upper.two_m) / 2 + (tjp + ti + tf + 2) / 2;
  const double sign = phase % 2 == 0 ? 1.0 : -1.0;
  return sign * std::sqrt((tjp + 1.0) * (tfp + 1.0) * (tf + 1.0)) * three_j * six_j;
}

// ---------------------------------------------------------------------------
// Fields

PolarizationMix PolarizationMix::with_purity(double purity, int q_intended) {
  if (!(purity >= 0.0 && purity <= 1.0)) throw InvariantError("purity must lie in [0, 1]");
  if (q_intended < -1 || q_intended > 1) throw InvariantError("polarization must be -1, 0 or 1");
  const double rest = 0.5 * (1.0 - purity);
  PolarizationMix m{rest, rest, rest};
  if (q_intended == 0) m.pi = purity;
  if (q_intended == 1) m.sigma_plus = purity;
  if (q_intended == -1) m.sigma_minus = purity;
  return m;
}

double PolarizationMix::fraction(int q) const {
  switch (q) {
    case 0: return pi;
    case 1: return sigma_plus;
    case -1: return sigma_minus;
    default: return 0.0;
  }
}

void PolarizationMix::validate() const {
  for (double f : {pi, sigma_plus, sigma_minus})
    if (!(f >= 0.0) || !std::isfinite(f)) throw InvariantError("polarization fractions must be >= 0");
  if (std::abs(pi + sigma_plus + sigma_minus - 1.0) > 1e-12)
    throw InvariantError("polarization fractions must sum to 1");
  if (!std::isfinite(phase_plus) || !std::isfinite(phase_minus))
    throw InvariantError("polarization phases must be finite");
}

void DriveConfig::validate() const {
  for (const FieldConfig* f : {&omega1, &omega_e, &omega2, &cavity}) {
    if (!(f->amplitude >= 0.0) || !std::isfinite(f->amplitude))
      throw InvariantError("field amplitudes must be finite and >= 0");
    f->mix.validate();
  }
  if (!(t1 > 0.0 && t2 > t1) || !std::isfinite(t2))
    throw InvariantError("pulse times must satisfy 0 < t1 < t2");
  if (omega2_off != 0.0 && !(omega2_off > t1 && omega2_off <= t2))
    throw InvariantError("the Omega_2 pulse must end inside (t1, t2]");
}

FieldMixes FieldMixes::uniform(double purity, const RolePolarizations& q) {
  return {PolarizationMix::with_purity(purity, q.omega1),
          PolarizationMix::with_purity(purity, q.omega_e),
          PolarizationMix::with_purity(purity, q.omega2),
          PolarizationMix::with_purity(purity, q.cavity)};
}

DriveConfig drive_config(const DiamondParams& p, const FieldMixes& mixes) {
  DriveConfig d;
  d.omega1 = {p.omega1, mixes.omega1};
  d.omega_e = {p.omega_e, mixes.omega_e};
  d.omega2 = {p.omega2, mixes.omega2};
  d.cavity = {p.g, mixes.cavity};
  d.detunings = p.detunings;
  d.t1 = p.t1;
  d.t2 = p.t2;
  return d;
}

// ---------------------------------------------------------------------------
// Model

namespace {

struct Manifold {
  std::string level;
  std::vector<int> two_f;  // modeled F levels
  int role_two_f = 0;
  double energy = 0.0;  // frame energy of the role F level
};

Complex field_factor(const PolarizationMix& mix, int q) {
  const double f = mix.fraction(q);
  if (f == 0.0) return 0.0;
  const double phase = q == 1 ? mix.phase_plus : (q == -1 ? mix.phase_minus : 0.0);
  return std::sqrt(f) * std::polar(1.0, phase);
}

}  // namespace

FullModel::FullModel(const AtomSpec& atom, const DriveConfig& drives, double kappa_f,
                     double kappa_l, const FullModelOptions& options)
    : role_(atom.role(options.role)), hamiltonian_(1), kappa_f_(kappa_f), kappa_l_(kappa_l),
      t1_(drives.t1), t2_(drives.t2), omega2_end_(drives.omega2_end()) {
  drives.validate();
  if (!(kappa_f >= 0.0 && kappa_l >= 0.0) || !(kappa_f + kappa_l > 0.0))
    throw InvariantError("cavity rates must be >= 0 with positive sum");
  const auto& r = role_;
  if (r.ground0.level != r.ground1.level)
    throw InvariantError("role " + r.name + ": qubit states must share a fine-structure level");
  {
    const std::string ids[] = {r.ground0.level, r.e1.level, r.e2.level, r.e3.level};
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        if (ids[a] == ids[b])
          throw InvariantError("role " + r.name + ": the four role levels must be distinct");
  }

  // Manifolds in role order: ground, e1, e2, e3.
  const double e1 = -drives.detunings.drive1;
  const double e2 = e1 - drives.detunings.drive_e;
  const double e3 = e2 + drives.detunings.cavity;
  std::vector<Manifold> manifolds = {{r.ground0.level, {}, r.ground0.two_f, 0.0},
                                     {r.e1.level, {}, r.e1.two_f, e1},
                                     {r.e2.level, {}, r.e2.two_f, e2},
                                     {r.e3.level, {}, r.e3.two_f, e3}};
  for (auto& m : manifolds) {
    if (options.off_resonant_partners) {
      m.two_f = atom.level(m.level).two_f;
    } else {
      m.two_f = {m.role_two_f};
      if (m.level == r.ground1.level && r.ground1.two_f != m.role_two_f) m.two_f.push_back(r.ground1.two_f);
      std::sort(m.two_f.begin(), m.two_f.end());
    }
    for (int tf : m.two_f) {
      const double energy = m.energy + atom.shift(m.level, tf) - atom.shift(m.level, m.role_two_f);
      for (int tm = -tf; tm <= tf; tm += 2) {
        atom_states_.push_back({m.level, tf, tm});
        frame_energy_.push_back(energy);
      }
    }
  }
  const Index na = atom_count();
  const Index n = dim();
  auto modeled = [&](const ZeemanState& s) { return contains(s); };

  // Coherent couplings. Each field couples its lower to its upper manifold;
  // elements are relative to the role transition's dipole amplitude.
  struct Leg {
    const FieldConfig* field;
    const ZeemanState* lower;
    const ZeemanState* upper;
    int q;
    const char* name;
  };
  const Leg legs[] = {{&drives.omega1, &r.ground0, &r.e1, r.polarizations.omega1, "Omega_1"},
                      {&drives.omega_e, &r.e1, &r.e2, r.polarizations.omega_e, "Omega_e"},
                      {&drives.cavity, &r.e3, &r.e2, r.polarizations.cavity, "cavity"},
                      {&drives.omega2, &r.ground0, &r.e3, r.polarizations.omega2, "Omega_2"}};
  Matrix parts[4];
  for (int k = 0; k < 4; ++k) {
    const Leg& leg = legs[k];
    const double reference = dipole_amplitude(atom, *leg.lower, *leg.upper, leg.q);
    if (reference == 0.0)
      throw InvariantError(std::string("role transition of ") + leg.name + " is dipole forbidden");
    Matrix m = Matrix::Zero(n, n);
    for (Index a = 0; a < na; ++a) {
      const ZeemanState& lo = atom_states_[static_cast<std::size_t>(a)];
      if (lo.level != leg.lower->level) continue;
      for (Index b = 0; b < na; ++b) {
        const ZeemanState& up = atom_states_[static_cast<std::size_t>(b)];
        if (up.level != leg.upper->level) continue;
        const int dm = up.two_m - lo.two_m;
        if (dm % 2 != 0 || std::abs(dm) > 2) continue;
        const int q = dm / 2;
        const Complex w = field_factor(leg.field->mix, q);
        if (w == 0.0) continue;
        const double amp = dipole_amplitude(atom, lo, up, q);
        if (amp == 0.0) continue;
        const Complex v = leg.field->amplitude * w * (amp / reference);
        if (k == 2) {
          // |upper, no photon> -> |lower, cavity photon>
          m(cavity_photon * na + a, empty * na + b) += v;
        } else {
          for (Index s = 0; s < 3; ++s) m(s * na + b, s * na + a) += v;
        }
      }
    }
    parts[k] = m + m.adjoint();
  }
  Matrix constant = parts[1] + parts[2];
  for (Index s = 0; s < 3; ++s)
    for (Index a = 0; a < na; ++a)
      constant(s * na + a, s * na + a) = frame_energy_[static_cast<std::size_t>(a)];

  hamiltonian_ = Hamiltonian(n);
  hamiltonian_.add(Operator::hermitian(constant));
  const double t1 = drives.t1, t2 = drives.t2, off = drives.omega2_end();
  hamiltonian_.add(Operator::hermitian(parts[0]),
                   [t1](double t) { return (t >= 0.0 && t <= t1) ? 1.0 : 0.0; });
  hamiltonian_.add(Operator::hermitian(parts[3]),
                   [t1, off](double t) { return (t >= t1 && t <= off) ? 1.0 : 0.0; });
  hamiltonian_.add_breakpoint(t1);
  hamiltonian_.add_breakpoint(off);
  hamiltonian_.add_breakpoint(t2);

  // Spontaneous emission, one secular channel per (upper F, lower F, q).
  using Triplet = Eigen::Triplet<Complex>;
  std::vector<double> absorbed(static_cast<std::size_t>(na), 0.0);
  auto sparse = [n](const std::vector<Triplet>& t) {
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
  };
  for (const auto& upper_m : manifolds) {
    const double gamma = atom.gamma(upper_m.level);
    if (gamma == 0.0) continue;
    if (options.decays == DecayHandling::strict_dump) {
      for (Index b = 0; b < na; ++b)
        if (atom_states_[static_cast<std::size_t>(b)].level == upper_m.level)
          absorbed[static_cast<std::size_t>(b)] += gamma;
      continue;
    }
    for (const auto& [lower_id, fraction] : atom.branching.at(upper_m.level)) {
      for (int tfp : upper_m.two_f)
        for (int tf : atom.level(lower_id).two_f)
          for (int q = -1; q <= 1; ++q) {
            std::vector<Triplet> entries;
            for (int tmp = -tfp; tmp <= tfp; tmp += 2) {
              const ZeemanState up{upper_m.level, tfp, tmp};
              const ZeemanState lo{lower_id, tf, tmp - 2 * q};
              if (std::abs(lo.two_m) > tf) continue;
              const double amp = dipole_amplitude(atom, lo, up, q);
              if (amp == 0.0) continue;
              const double rate = gamma * fraction * amp * amp;
              const Index b = index(up);
              if (!modeled(lo)) {
                absorbed[static_cast<std::size_t>(b)] += rate;
                continue;
              }
              const Index a = index(lo);
              for (Index s = 0; s < 3; ++s) entries.emplace_back(s * na + a, s * na + b, std::sqrt(rate));
            }
            if (!entries.empty())
              terms_.emplace_back(sparse(entries), upper_m.level + "->" + lower_id);
          }
    }
  }
  std::vector<Triplet> dump;
  for (Index b = 0; b < na; ++b) {
    const double rate = absorbed[static_cast<std::size_t>(b)];
    if (rate > 0.0)
      for (Index s = 0; s < 3; ++s) dump.emplace_back(s * na + b, s * na + b, std::sqrt(rate));
  }
  if (!dump.empty()) terms_.emplace_back(sparse(dump), "dump", true);

  std::vector<Triplet> fiber, loss;
  for (Index a = 0; a < na; ++a) {
    fiber.emplace_back(fiber_photon * na + a, cavity_photon * na + a, std::sqrt(kappa_f));
    loss.emplace_back(cavity_photon * na + a, cavity_photon * na + a, std::sqrt(kappa_l));
  }
  fiber_term_ = terms_.size();
  terms_.emplace_back(sparse(fiber), "fiber");
  if (kappa_l > 0.0) terms_.emplace_back(sparse(loss), "loss", true);
}

bool FullModel::contains(const ZeemanState& s) const {
  return std::find(atom_states_.begin(), atom_states_.end(), s) != atom_states_.end();
}

Index FullModel::index(const ZeemanState& s, Sector sector) const {
  const auto it = std::find(atom_states_.begin(), atom_states_.end(), s);
  if (it == atom_states_.end()) throw DimensionError("state " + to_string(s) + " is not modeled");
  return static_cast<Index>(sector) * atom_count() + static_cast<Index>(it - atom_states_.begin());
}

double FullModel::decay_rate(const ZeemanState& s) const {
  const Index i = index(s);
  double total = 0.0;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    if (k == fiber_term_ || terms_[k].label() == "loss") continue;
    total += terms_[k].rate_from(i);
  }
  return total;
}

FullModel build_full_model(const AtomSpec& atom, const DriveConfig& drives, double kappa_f,
                           double kappa_l, const FullModelOptions& options) {
  return FullModel(atom, drives, kappa_f, kappa_l, options);
}

// ---------------------------------------------------------------------------
// One cycle

namespace {

void append_full_populations(CycleResult& out, const FullModel& model, const Eigen::VectorXd& pop) {
  const auto& r = model.role();
  const Index na = model.atom_count();
  const Index i0 = model.index(r.ground0), i1 = model.index(r.ground1);
  const Index ie1 = model.index(r.e1), ie2 = model.index(r.e2), ie3 = model.index(r.e3);
  double p0 = 0, p1 = 0, pe1 = 0, pe2 = 0, pe3 = 0, other = 0, photon = 0, fib = 0, norm = 0;
  for (Index i = 0; i < model.dim(); ++i) {
    const double w = pop(i);
    const Index a = i % na;
    const Index sector = i / na;
    norm += w;
    if (sector == FullModel::cavity_photon) photon += w;
    if (sector == FullModel::fiber_photon) fib += w;
    if (a == i0) p0 += w;
    else if (a == i1) p1 += w;
    else if (a == ie1) pe1 += w;
    else if (a == ie2) pe2 += w;
    else if (a == ie3) pe3 += w;
    else other += w;
  }
  auto& m = out.populations;
  m["pop_0"].push_back(p0);
  m["pop_1"].push_back(p1);
  m["pop_e1"].push_back(pe1);
  m["pop_e2"].push_back(pe2);
  m["pop_e3"].push_back(pe3);
  m["pop_other_atomic"].push_back(other);
  m["pop_photon"].push_back(photon);
  m["fiber_record"].push_back(fib);
  m["absorbed"].push_back(1.0 - norm);
  m["norm"].push_back(norm);
}

}  // namespace

CycleResult simulate_full_cycle(const FullModel& model, Engine engine,
                                const FullCycleOptions& options) {
  std::vector<double> segments = {0.0, model.t1(), model.omega2_end(), model.t2()};
  segments.erase(std::unique(segments.begin(), segments.end()), segments.end());
  std::vector<double> grid = segments;
  for (double t : options.trace_times)
    if (t > 0.0 && t < model.t2()) grid.push_back(t);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  IntegratorOptions opt;
  opt.tolerance = options.tolerance;
  opt.record_steps = false;
  const Index start = model.index(model.role().ground0);
  const Index target = model.index(model.role().ground0, FullModel::fiber_photon);
  CycleResult out;
  out.times = grid;
  if (engine == Engine::master) {
    const auto traj = evolve_master(DensityMatrix::basis_state(model.dim(), start),
                                    model.hamiltonian(), model.terms(), grid, opt);
    for (const auto& rho : traj.states) append_full_populations(out, model, rho.populations());
    const auto final_pops = traj.final_state().populations();
    out.rho_0_lambda = final_pops(target);
    out.success_probability =
        std::clamp(final_pops.segment(FullModel::fiber_photon * model.atom_count(),
                                      model.atom_count()).sum(),
                   0.0, 1.0);
  } else {
    const auto r = first_jump_transfer(StateVector::basis_state(model.dim(), start),
                                       model.hamiltonian(), model.terms(), model.fiber_term(),
                                       target, segments,
                                       options.quadrature_intervals, grid, opt);
    for (const auto& psi : r.forward.states) append_full_populations(out, model, psi.populations());
    out.rho_0_lambda = r.transfer;
    out.success_probability = std::clamp(r.jump_probability, 0.0, 1.0);
  }
  out.rho_0_lambda = std::max(out.rho_0_lambda, 0.0);
  out.fidelity = model.kappa_f() > 0.0
                     ? std::clamp((model.kappa_f() + model.kappa_l()) * out.rho_0_lambda /
                                      model.kappa_f(),
                                  0.0, 1.0)
                     : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Optimisation and purity curves

DiamondParams full_model_rates(const AtomSpec& atom, const std::string& role, double c,
                               double kappa, double fiber_fraction) {
  const auto& r = atom.role(role);
  RateRatios rates;
  rates.kappa = kappa;
  rates.fiber_fraction = fiber_fraction;
  rates.gamma1 = atom.gamma(r.e1.level);
  rates.gamma2 = atom.gamma(r.e2.level);
  rates.gamma3 = atom.gamma(r.e3.level);
  return scaled_start(c, rates);
}

FullSearch optimize_full_pulses(const AtomSpec& atom, const DiamondParams& start,
                                const FieldMixes& mixes, const FullSearchSettings& settings) {
  auto fidelity = [&](const DiamondParams& p, Engine engine) {
    DriveConfig drives = drive_config(p, mixes);
    if (settings.omega2_settle > 0.0) drives.omega2_off = p.t2 - settings.omega2_settle;
    const FullModel model(atom, drives, p.kappa_f, p.kappa_l, settings.model);
    return simulate_full_cycle(model, engine, settings.cycle).fidelity;
  };
  const double c = cooperativity(start.g, start.kappa(), start.gamma2, start.gamma3);
  const auto best = optimize_pulses(
      start, [&](const DiamondParams& p) { return fidelity(p, Engine::no_jump); },
      c * start.gamma3, settings.bounds, settings.optimizer);
  FullSearch out;
  out.params = best.params;
  out.fidelity_no_jump = best.fidelity;
  out.fidelity = settings.report_engine == Engine::no_jump ? best.fidelity
                                                           : fidelity(best.params, Engine::master);
  out.evaluations = best.evaluations;
  out.converged = best.converged;
  return out;
}

std::vector<PurityRow> purity_fidelity_curve(const AtomSpec& atom, double purity,
                                             std::vector<double> c_values, double kappa,
                                             const FullSearchSettings& settings, int jobs) {
  if (!(purity > 0.0 && purity <= 1.0)) throw std::invalid_argument("purity must lie in (0, 1]");
  for (double c : c_values)
    if (!(c > 0.0)) throw std::invalid_argument("cooperativity values must be positive");
  std::sort(c_values.begin(), c_values.end());
  const auto mixes = FieldMixes::uniform(purity, atom.role(settings.model.role).polarizations);
  std::vector<PurityRow> rows(c_values.size());
  std::vector<std::exception_ptr> errors(c_values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < c_values.size(); i = next++) {
      try {
        const auto start = full_model_rates(atom, settings.model.role, c_values[i], kappa, 0.5);
        rows[i] = {c_values[i], optimize_full_pulses(atom, start, mixes, settings)};
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
