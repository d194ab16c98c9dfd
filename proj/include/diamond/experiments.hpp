#pragma once

#include <string>

#include "diamond/config.hpp"
#include "diamond/result_table.hpp"

// The five diamond-node experiments. Each returns a table whose columns are
// listed in the README; rows are computed on `config.jobs` threads and
// merged by row index.
namespace diamond {

// Optimised error 1 - F versus cooperativity. Generic tier: master-equation
// optimum plus the closed-form error at the same pulses. Full tiers: the
// full model at 100% purity.
ResultTable run_error_scaling(const ExperimentConfig& config);

// Populations and pulse envelopes over one cycle.
ResultTable run_time_trace(const ExperimentConfig& config);

// Optimised full-model fidelity per (purity, C). Purities are searched in
// ascending order at each C, each search starting from the optimum of the
// next lower purity.
ResultTable run_purity_sweep(const ExperimentConfig& config);

// Full model with per-field purities, lab-time pulse lengths and kappa from
// the cavity quality factor; only the three amplitudes are optimised.
ResultTable run_combined(const ExperimentConfig& config);

// Cavity rates and cooperativity versus distance from the surface.
ResultTable run_cavity_params(const ExperimentConfig& config);

ResultTable run_experiment(const ExperimentConfig& config);

// "generic" for the generic tier, otherwise the atomic data version (and the
// cavity data version for experiments that read it).
std::string data_version(const ExperimentConfig& config);

}  // namespace diamond
