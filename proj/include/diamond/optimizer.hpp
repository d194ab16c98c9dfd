#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "diamond/diamond_model.hpp"

namespace diamond {

struct OptimizerSettings {
  std::size_t max_evaluations = 400;
  // Points per dimension of the coarse grid that seeds the simplex; 1 skips
  // the grid and starts from the given point.
  int grid_points = 3;
  // Simplex restarts from the incumbent after convergence.
  int restarts = 1;
  double initial_step = 0.15;  // in normalised box coordinates
  double x_tolerance = 1e-4;
  double f_tolerance = 1e-7;
  std::uint64_t seed = 7;
};

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct OptimizationResult {
  std::vector<double> best_x;
  double best_value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;  // false when the evaluation budget ran out
  std::vector<double> trace;  // incumbent value after each simplex iteration
};

// Maximises `objective` over the box: coarse grid, then Nelder-Mead in
// coordinates normalised to [0, 1] with points projected back into the box.
// Objective exceptions count as -infinity. Deterministic for a given seed.
OptimizationResult maximize(const std::function<double(const std::vector<double>&)>& objective,
                            const std::vector<double>& start, const Box& box,
                            const OptimizerSettings& settings = {});

// Search ranges for the five pulse variables, as factors of the starting
// point (log-scaled): Omega_1, Omega_e, t1, plus absolute Omega_2 limits in
// units of C gamma3 and the Omega_2 pulse area relative to pi / 2.
struct PulseBounds {
  double omega1_factor_low = 0.1, omega1_factor_high = 10.0;
  double omega_e_factor_low = 0.3, omega_e_factor_high = 30.0;
  double t1_factor_low = 0.2, t1_factor_high = 5.0;
  double omega2_c_low = 1.0, omega2_c_high = 10.0;
  double area_low = 0.6, area_high = 1.4;
  // Keep t1 and t2 of the start point and search only the three amplitudes.
  bool fixed_times = false;
};

// Optimises (Omega_1, Omega_e, Omega_2, t1, t2) of `start`; the other fields
// are kept. `c_gamma3` is C gamma3 of the setting (sets the Omega_2 range).
PulseSearch optimize_pulses(const DiamondParams& start, const FidelityObjective& objective,
                            double c_gamma3, const PulseBounds& bounds = {},
                            const OptimizerSettings& settings = {});

// Adapter for sweep_error_vs_cooperativity; C is recovered from the start
// point's g, kappa and gamma2 + gamma3.
PulseOptimizer make_pulse_optimizer(const PulseBounds& bounds = {},
                                    const OptimizerSettings& settings = {});

}  // namespace diamond
