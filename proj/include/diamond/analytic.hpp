#pragma once

#include <complex>
#include <string>
#include <vector>

#include "diamond/diamond_model.hpp"

// Closed-form no-jump dynamics of the diamond scheme during the first pulse,
// with the intermediate levels adiabatically eliminated. The emitted-photon
// amplitude is c2(t) = i (alpha / beta) exp(-lambda t) sinh(beta t).
namespace diamond::analytic {

enum class AlphaDenominator {
  consistent,  // gamma1 gamma2 + 4 Omega_e^2, as in the eliminated equations
  verbatim,    // gamma1 gamma2 + Omega_e^2
};

struct Options {
  AlphaDenominator alpha = AlphaDenominator::consistent;
};

struct Intermediates {
  Complex alpha;
  Complex beta;
  Complex lambda;
  // Rates of the eliminated two-amplitude system
  //   c0' = -depletion c0 + i coupling c2,  c2' = -damping c2 + i coupling c0.
  double depletion = 0.0;
  double damping = 0.0;
  double coupling = 0.0;
  std::vector<std::string> warnings;  // e.g. adiabatic elimination questionable
};

// Throws std::domain_error when gamma1 gamma2 + 4 Omega_e^2 (or the chosen
// alpha denominator) vanishes.
Intermediates intermediates(const DiamondParams& p, const Options& options = {});

// c2(t) for 0 <= t <= t1; uses the beta -> 0 limit when |beta t| is small.
Complex c2_amplitude(const DiamondParams& p, double t, const Options& options = {});
// Companion amplitude c0(t) of the same two-level solution.
Complex c0_amplitude(const DiamondParams& p, double t, const Options& options = {});

// rho_e3,0(t1) = kappa * integral_0^t1 |c2(t)|^2 exp(-gamma3 (t1 - t)) dt.
double rho_e3_integral(const DiamondParams& p, double t1, const Options& options = {});

// Closed-form F ~ rho_e3,0(t1) + |c2(t1)|^2 from the five-term bracket.
// Falls back to the equivalent divided-difference form when a denominator
// is below 1e-9 or |beta t1| is small.
double fidelity_closed_form(const DiamondParams& p, double t1, const Options& options = {});

struct BadCavity {
  double fidelity = 0.0;
  std::vector<std::string> warnings;
};
// Limit kappa >> g, Omega_1, Omega_e, gamma_i. Warns when kappa is below
// 50 times the largest of these.
BadCavity fidelity_bad_cavity(const DiamondParams& p, double t1);

struct ScalingChoice {
  double a = 0.5;
  double c = 10.0;
};

struct ScaledDrives {
  double omega1 = 0.0;
  double omega_e = 0.0;
  double t1 = 0.0;
  std::vector<std::string> warnings;
};

// Omega_1 = a C gamma1, Omega_e = C gamma2, t1 = ln C / (C gamma1).
// Throws std::domain_error for C <= 1. Warns when 4 a^2 < gamma2 / (gamma2 +
// gamma3), where the ln C / C error scaling no longer holds.
ScaledDrives scaling_parameters(const ScalingChoice& choice, double gamma1, double gamma2,
                                double gamma3);

// Helpers shared with tests. E(z, t) = (exp(z t) - 1) / z, series near z = 0.
Complex exp_integral(Complex z, double t);
// sinh(z) / z, series near z = 0.
Complex sinhc(Complex z);

}  // namespace diamond::analytic
