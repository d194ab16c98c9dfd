#include "diamond/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "diamond/analytic.hpp"
#include "diamond/atomic_data.hpp"
#include "diamond/cavity_link.hpp"
#include "diamond/full_model.hpp"

namespace diamond {

namespace {

using Row = std::vector<Cell>;

Cell num(double x) { return x; }
Cell count(std::size_t n) { return static_cast<std::int64_t>(n); }
Cell flag(bool b) { return static_cast<std::int64_t>(b ? 1 : 0); }

// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows the first failure
// by index.
template <class Fn>
void parallel_rows(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < std::min(static_cast<std::size_t>(std::max(jobs, 1)), n); ++k)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

AtomSpec load_atom(const ExperimentConfig& c) {
  return c.atom_data ? load_atom_spec(*c.atom_data) : bundled_atom_spec(tier_species(c.tier));
}

OptimizerSettings optimizer_settings(const ExperimentConfig& c) {
  OptimizerSettings o = c.optimizer;
  o.seed = c.seed;
  return o;
}

FullSearchSettings full_settings(const ExperimentConfig& c) {
  FullSearchSettings s;
  s.model.role = c.role;
  s.model.decays = c.decays;
  s.model.off_resonant_partners = c.off_resonant_partners;
  s.cycle.tolerance = c.tolerance;
  s.bounds = c.bounds;
  s.optimizer = optimizer_settings(c);
  return s;
}

void note_budget(ResultTable& t, bool converged, const std::string& row) {
  if (converged) return;
  t.budget_exhausted = true;
  t.warnings.push_back(row + ": evaluation budget exhausted, best point found is reported");
}

std::string describe_c(double c) { return "C=" + format_number(c); }

std::vector<double> linear_times(double t_end, std::size_t points) {
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i)
    t[i] = t_end * static_cast<double>(i) / static_cast<double>(points - 1);
  return t;
}

void apply_pulse(DiamondParams& p, const PulseSettings& s) {
  p.omega1 = s.omega1;
  p.omega_e = s.omega_e;
  p.omega2 = s.omega2;
  p.t1 = s.t1;
  p.t2 = s.t2;
}

void note_params(ResultTable& t, const DiamondParams& p) {
  const std::pair<const char*, double> items[] = {
      {"g", p.g},           {"kappa_f", p.kappa_f}, {"kappa_l", p.kappa_l},
      {"gamma1", p.gamma1}, {"gamma2", p.gamma2},   {"gamma3", p.gamma3},
      {"omega1", p.omega1}, {"omega_e", p.omega_e}, {"omega2", p.omega2},
      {"t1", p.t1},         {"t2", p.t2}};
  for (const auto& [k, v] : items) t.notes[std::string("params.") + k] = format_number(v);
}

void note_atom(ResultTable& t, const AtomSpec& atom) {
  t.notes["atomic_data.species"] = atom.species;
  t.notes["atomic_data.version"] = atom.data_version;
  t.notes["reference_gamma_2pi_MHz"] = format_number(atom.reference_gamma_2pi_mhz);
  for (const auto& [k, v] : atom.provenance) t.notes["atomic_data.provenance." + k] = v;
}

CavityParams resolved_cavity(const ExperimentConfig& c, const AtomSpec& atom,
                             const CavityDesign& design) {
  CavityParams p = cavity_params_for(atom, c.role, design);
  const auto& o = c.cavity;
  if (o.wavelength_nm) p.wavelength_nm = *o.wavelength_nm;
  if (o.quality_factor) p.quality_factor = *o.quality_factor;
  if (o.mode_volume) p.mode_volume = *o.mode_volume;
  if (o.refractive_index) p.refractive_index = *o.refractive_index;
  if (o.decay_length_nm) p.decay_length_nm = *o.decay_length_nm;
  p.normalization = o.normalization;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("cavity: ") + e.what());
  }
  return p;
}

void note_cavity(ResultTable& t, const CavityParams& p, const CavityDesign& design) {
  t.notes["cavity_data.version"] = design.data_version;
  for (const auto& [k, v] : design.provenance) t.notes["cavity_data.provenance." + k] = v;
  t.notes["cavity.wavelength_nm"] = format_number(p.wavelength_nm);
  t.notes["cavity.quality_factor"] = format_number(p.quality_factor);
  t.notes["cavity.mode_volume"] = format_number(p.mode_volume);
  t.notes["cavity.refractive_index"] = format_number(p.refractive_index);
  t.notes["cavity.decay_length_nm"] = format_number(p.decay_length_nm);
  t.notes["cavity.dipole_ea0"] = format_number(p.dipole_ea0);
  t.notes["cavity.normalization"] =
      p.normalization == FieldNormalization::dielectric ? "dielectric" : "vacuum";
}

// ---------------------------------------------------------------------------

ResultTable error_scaling_generic(const ExperimentConfig& c) {
  ResultTable t;
  t.columns = {"cooperativity", "error", "error_analytic", "error_ratio", "scaled_error",
               "g",             "omega1", "omega_e",       "omega2",      "t1",
               "t2",            "evaluations", "converged"};
  CycleOptions cycle;
  cycle.tolerance = c.tolerance;
  const auto rows = sweep_error_vs_cooperativity(
      c.cooperativities, c.rates, make_pulse_optimizer(c.bounds, optimizer_settings(c)), cycle,
      c.jobs);
  analytic::Options an;
  an.alpha = c.alpha;
  for (const auto& r : rows) {
    const auto& p = r.params;
    const double err_an = 1.0 - analytic::fidelity_closed_form(p, p.t1, an);
    t.add_row({num(r.cooperativity), num(r.error), num(err_an), num(r.error / err_an),
               num(r.error * r.cooperativity / std::log(r.cooperativity)), num(p.g), num(p.omega1),
               num(p.omega_e), num(p.omega2), num(p.t1), num(p.t2), count(r.evaluations),
               flag(r.converged)});
    note_budget(t, r.converged, describe_c(r.cooperativity));
  }
  t.notes["engine"] = "master";
  t.notes["analytic_alpha"] = c.alpha == analytic::AlphaDenominator::consistent ? "consistent" : "verbatim";
  return t;
}

ResultTable error_scaling_full(const ExperimentConfig& c) {
  const AtomSpec atom = load_atom(c);
  const auto settings = full_settings(c);
  const auto mixes = FieldMixes::uniform(1.0, atom.role(c.role).polarizations);
  const auto cs = [&] {
    auto v = c.cooperativities;
    std::sort(v.begin(), v.end());
    return v;
  }();
  std::vector<FullSearch> found(cs.size());
  parallel_rows(cs.size(), c.jobs, [&](std::size_t i) {
    const auto start = full_model_rates(atom, c.role, cs[i], c.rates.kappa, c.rates.fiber_fraction);
    found[i] = optimize_full_pulses(atom, start, mixes, settings);
  });
  ResultTable t;
  t.columns = {"cooperativity", "error", "error_no_jump", "scaled_error", "g", "omega1",
               "omega_e",       "omega2", "t1",           "t2",           "evaluations", "converged"};
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& f = found[i];
    const auto& p = f.params;
    const double err = 1.0 - f.fidelity;
    t.add_row({num(cs[i]), num(err), num(1.0 - f.fidelity_no_jump),
               num(err * cs[i] / std::log(cs[i])), num(p.g), num(p.omega1), num(p.omega_e),
               num(p.omega2), num(p.t1), num(p.t2), count(f.evaluations), flag(f.converged)});
    note_budget(t, f.converged, describe_c(cs[i]));
  }
  note_atom(t, atom);
  t.notes["role"] = c.role;
  return t;
}

ResultTable time_trace_generic(const ExperimentConfig& c) {
  DiamondParams p = scaled_start(c.cooperativity, c.rates);
  ResultTable t;
  if (c.pulse) {
    apply_pulse(p, *c.pulse);
  } else {
    CycleOptions cycle;
    cycle.tolerance = c.tolerance;
    const auto best = make_pulse_optimizer(c.bounds, optimizer_settings(c))(
        p, [&](const DiamondParams& q) { return simulate_cycle(q, Engine::master, cycle).fidelity; });
    p = best.params;
    note_budget(t, best.converged, describe_c(c.cooperativity));
  }
  p.validate();
  CycleOptions cycle;
  cycle.tolerance = c.tolerance;
  cycle.trace_times = linear_times(p.t2, c.trace_points);
  const auto r = simulate_cycle(p, c.engine, cycle);

  t.columns = {"t",        "omega1_t",   "omega2_t", "pop_0",    "pop_e1",       "pop_e2",
               "pop_e3",   "pop_photon", "norm",     "pop_dump", "fiber_record", "loss_record"};
  const auto& s = r.populations;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double ti = r.times[i];
    t.add_row({num(ti), num(omega1_at(p, ti)), num(omega2_at(p, ti)), num(s.at("pop_0")[i]),
               num(s.at("pop_e1")[i]), num(s.at("pop_e2")[i]), num(s.at("pop_e3")[i]),
               num(s.at("pop_photon")[i]), num(s.at("norm")[i]), num(s.at("pop_dump")[i]),
               num(s.at("fiber_record")[i]), num(s.at("loss_record")[i])});
  }
  note_params(t, p);
  t.notes["cooperativity"] = format_number(c.cooperativity);
  t.notes["engine"] = c.engine == Engine::master ? "master" : "no-jump";
  t.notes["fidelity"] = format_number(r.fidelity);
  t.notes["rho_0_lambda"] = format_number(r.rho_0_lambda);
  t.notes["success_probability"] = format_number(r.success_probability);
  return t;
}

ResultTable time_trace_full(const ExperimentConfig& c) {
  const AtomSpec atom = load_atom(c);
  const auto settings = full_settings(c);
  const auto mixes = FieldMixes::uniform(c.purity, atom.role(c.role).polarizations);
  DiamondParams p =
      full_model_rates(atom, c.role, c.cooperativity, c.rates.kappa, c.rates.fiber_fraction);
  ResultTable t;
  if (c.pulse) {
    apply_pulse(p, *c.pulse);
  } else {
    const auto best = optimize_full_pulses(atom, p, mixes, settings);
    p = best.params;
    note_budget(t, best.converged, describe_c(c.cooperativity));
  }
  const FullModel model(atom, drive_config(p, mixes), p.kappa_f, p.kappa_l, settings.model);
  FullCycleOptions cycle = settings.cycle;
  cycle.trace_times = linear_times(p.t2, c.trace_points);
  const auto r = simulate_full_cycle(model, c.engine, cycle);

  t.columns = {"t",      "omega1_t", "omega2_t",         "pop_0",      "pop_1",
               "pop_e1", "pop_e2",   "pop_e3",           "pop_other_atomic", "pop_photon",
               "fiber_record", "absorbed", "norm"};
  const auto& s = r.populations;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double ti = r.times[i];
    t.add_row({num(ti), num(omega1_at(p, ti)), num(omega2_at(p, ti)), num(s.at("pop_0")[i]),
               num(s.at("pop_1")[i]), num(s.at("pop_e1")[i]), num(s.at("pop_e2")[i]),
               num(s.at("pop_e3")[i]), num(s.at("pop_other_atomic")[i]),
               num(s.at("pop_photon")[i]), num(s.at("fiber_record")[i]), num(s.at("absorbed")[i]),
               num(s.at("norm")[i])});
  }
  note_params(t, p);
  note_atom(t, atom);
  t.notes["role"] = c.role;
  t.notes["purity"] = format_number(c.purity);
  t.notes["cooperativity"] = format_number(c.cooperativity);
  t.notes["engine"] = c.engine == Engine::master ? "master" : "no-jump";
  t.notes["fidelity"] = format_number(r.fidelity);
  t.notes["rho_0_lambda"] = format_number(r.rho_0_lambda);
  t.notes["success_probability"] = format_number(r.success_probability);
  return t;
}

}  // namespace

ResultTable run_error_scaling(const ExperimentConfig& c) {
  c.validate();
  return c.tier == Tier::generic ? error_scaling_generic(c) : error_scaling_full(c);
}

ResultTable run_time_trace(const ExperimentConfig& c) {
  c.validate();
  return c.tier == Tier::generic ? time_trace_generic(c) : time_trace_full(c);
}

ResultTable run_purity_sweep(const ExperimentConfig& c) {
  c.validate();
  const AtomSpec atom = load_atom(c);
  const auto settings = full_settings(c);
  const auto q = atom.role(c.role).polarizations;
  const auto cs = sorted_unique(c.cooperativities);
  const auto purities = sorted_unique(c.purities);  // searched in this order
  const std::size_t np = purities.size();

  // found[i * np + k]: C index i, purity index k.
  std::vector<FullSearch> found(cs.size() * np);
  parallel_rows(cs.size(), c.jobs, [&](std::size_t i) {
    DiamondParams start = full_model_rates(atom, c.role, cs[i], c.rates.kappa, c.rates.fiber_fraction);
    for (std::size_t k = 0; k < np; ++k) {
      auto& f = found[i * np + k];
      f = optimize_full_pulses(atom, start, FieldMixes::uniform(purities[k], q), settings);
      start = f.params;
    }
  });

  ResultTable t;
  t.columns = {"purity", "cooperativity", "fidelity", "fidelity_no_jump", "omega1", "omega_e",
               "omega2", "t1",            "t2",       "evaluations",      "converged", "start"};
  for (std::size_t kk = np; kk-- > 0;) {
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto& f = found[i * np + kk];
      const auto& p = f.params;
      t.add_row({num(purities[kk]), num(cs[i]), num(f.fidelity), num(f.fidelity_no_jump),
                 num(p.omega1), num(p.omega_e), num(p.omega2), num(p.t1), num(p.t2),
                 count(f.evaluations), flag(f.converged),
                 std::string(kk == 0 ? "scaled" : "purity " + format_number(purities[kk - 1]))});
      note_budget(t, f.converged, "purity=" + format_number(purities[kk]) + " " + describe_c(cs[i]));
    }
  }
  note_atom(t, atom);
  t.notes["role"] = c.role;
  t.notes["kappa"] = format_number(c.rates.kappa);
  return t;
}

ResultTable run_combined(const ExperimentConfig& c) {
  c.validate();
  const AtomSpec atom = load_atom(c);
  const CavityDesign design = bundled_cavity_design();
  const CavityParams cavity = resolved_cavity(c, atom, design);
  const double kappa = c.kappa_given ? c.rates.kappa : kappa_from_q(cavity).gamma_units;
  const double ns_to_gamma = gamma_to_si(1.0, atom.reference_gamma_2pi_mhz) * 1e-9;
  const double t1 = c.pulses_ns.omega1_ns * ns_to_gamma;
  const double pulse2 = c.pulses_ns.omega2_ns * ns_to_gamma;
  const double settle = c.pulses_ns.settle_ns * ns_to_gamma;
  const double t2 = t1 + pulse2 + settle;

  auto settings = full_settings(c);
  settings.report_engine = Engine::no_jump;
  settings.omega2_settle = settle;
  const auto q = atom.role(c.role).polarizations;
  FieldMixes mixes;
  mixes.omega1 = PolarizationMix::with_purity(c.field_purities.omega1, q.omega1);
  mixes.omega_e = PolarizationMix::with_purity(c.field_purities.omega_e, q.omega_e);
  mixes.omega2 = PolarizationMix::with_purity(c.field_purities.omega2, q.omega2);
  mixes.cavity = PolarizationMix::with_purity(c.field_purities.cavity, q.cavity);

  const auto& cs = c.cooperativities;
  struct Out {
    FullSearch search;
    CycleResult master;
  };
  std::vector<Out> found(cs.size());
  parallel_rows(cs.size(), c.jobs, [&](std::size_t i) {
    DiamondParams start = full_model_rates(atom, c.role, cs[i], kappa, c.rates.fiber_fraction);
    start.t1 = t1;
    start.t2 = t2;
    start.omega2 = 0.5 * M_PI / pulse2;
    auto& o = found[i];
    o.search = optimize_full_pulses(atom, start, mixes, settings);
    DriveConfig drives = drive_config(o.search.params, mixes);
    if (settle > 0.0) drives.omega2_off = t2 - settle;
    const FullModel model(atom, drives, o.search.params.kappa_f, o.search.params.kappa_l,
                          settings.model);
    o.master = simulate_full_cycle(model, Engine::master, settings.cycle);
  });

  ResultTable t;
  t.columns = {"cooperativity",  "kappa",         "fiber_fraction",   "purity_omega1",
               "purity_omega_e", "purity_omega2", "purity_cavity",    "t1",
               "t2",             "omega2_end",    "omega1",           "omega_e",
               "omega2",         "g",             "fidelity",         "fidelity_no_jump",
               "success_probability", "evaluations", "converged"};
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& o = found[i];
    const auto& p = o.search.params;
    t.add_row({num(cs[i]), num(kappa), num(c.rates.fiber_fraction), num(c.field_purities.omega1),
               num(c.field_purities.omega_e), num(c.field_purities.omega2),
               num(c.field_purities.cavity), num(p.t1), num(p.t2), num(p.t2 - settle),
               num(p.omega1), num(p.omega_e), num(p.omega2), num(p.g), num(o.master.fidelity),
               num(o.search.fidelity_no_jump), num(o.master.success_probability),
               count(o.search.evaluations), flag(o.search.converged)});
    note_budget(t, o.search.converged, describe_c(cs[i]));
  }
  note_atom(t, atom);
  note_cavity(t, cavity, design);
  t.notes["role"] = c.role;
  t.notes["kappa_source"] = c.kappa_given ? "config" : "quality factor";
  t.notes["pulse.omega1_ns"] = format_number(c.pulses_ns.omega1_ns);
  t.notes["pulse.omega2_ns"] = format_number(c.pulses_ns.omega2_ns);
  t.notes["pulse.settle_ns"] = format_number(c.pulses_ns.settle_ns);
  t.notes["pulse.ns_to_inverse_gamma"] = format_number(ns_to_gamma);
  return t;
}

ResultTable run_cavity_params(const ExperimentConfig& c) {
  c.validate();
  const AtomSpec atom = load_atom(c);
  const CavityDesign design = bundled_cavity_design();
  const CavityParams cavity = resolved_cavity(c, atom, design);
  const auto& role = atom.role(c.role);
  const double gamma23 = atom.gamma(role.e2.level) + atom.gamma(role.e3.level);
  const Rate kappa = kappa_from_q(cavity);
  const auto [kappa_f, kappa_l] = critical_split(kappa.gamma_units);
  const double to_2pi_ghz = 1.0 / (2.0 * M_PI * 1e9);

  ResultTable t;
  t.columns = {"distance_nm", "g_2pi_GHz",    "g_gamma",       "kappa_2pi_GHz", "kappa_gamma",
               "kappa_f_gamma", "kappa_l_gamma", "cooperativity", "collection_factor"};
  for (double z : c.distances_nm) {
    const Rate g = g_at_distance(cavity, z);
    t.add_row({num(z), num(g.si * to_2pi_ghz), num(g.gamma_units), num(kappa.si * to_2pi_ghz),
               num(kappa.gamma_units), num(kappa_f), num(kappa_l),
               num(cooperativity(g.gamma_units, kappa.gamma_units, atom.gamma(role.e2.level),
                                 atom.gamma(role.e3.level))),
               num(kappa_f / kappa.gamma_units)});
  }
  const Rate g_peak = g_from_mode_volume(cavity);
  note_atom(t, atom);
  note_cavity(t, cavity, design);
  t.notes["role"] = c.role;
  t.notes["gamma2_plus_gamma3"] = format_number(gamma23);
  t.notes["mode_volume_m3"] = format_number(mode_volume_m3(cavity));
  t.notes["peak_cooperativity"] = format_number(
      g_peak.gamma_units * g_peak.gamma_units / (kappa.gamma_units * gamma23));
  return t;
}

ResultTable run_experiment(const ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::error_scaling: return run_error_scaling(c);
    case ExperimentKind::time_trace: return run_time_trace(c);
    case ExperimentKind::purity_sweep: return run_purity_sweep(c);
    case ExperimentKind::combined: return run_combined(c);
    case ExperimentKind::cavity_params: return run_cavity_params(c);
  }
  throw ConfigError("experiment: unknown experiment");
}

std::string data_version(const ExperimentConfig& c) {
  if (c.tier == Tier::generic) return "generic";
  std::string v = load_atom(c).data_version;
  if (c.experiment == ExperimentKind::combined || c.experiment == ExperimentKind::cavity_params)
    v += "+" + bundled_cavity_design().data_version;
  return v;
}

}  // namespace diamond
