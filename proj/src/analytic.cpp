#include "diamond/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace diamond::analytic {

namespace {

constexpr double kDegenerate = 1e-9;
// Below this |beta t1| the divided difference in the integral is expanded
// in powers of beta^2.
constexpr double kSmallBeta = 0.05;

double validated_denominator(const DiamondParams& p) {
  const double d = p.gamma1 * p.gamma2 + 4.0 * p.omega_e * p.omega_e;
  if (d == 0.0) throw std::domain_error("gamma1 gamma2 + 4 Omega_e^2 vanishes");
  return d;
}

// exp(shift) I_n(w) with I_n(w) = integral_0^1 x^n exp(w x) dx, n = 0..n_max.
// The factor is applied inside the recurrence so that large w with a
// compensating shift does not overflow.
std::vector<double> unit_moments(double w, double shift, int n_max) {
  std::vector<double> m(static_cast<std::size_t>(n_max) + 1);
  const double ew = std::exp(w + shift);
  if (std::abs(w) > n_max) {
    m[0] = (ew - std::exp(shift)) / w;
    for (int k = 1; k <= n_max; ++k) m[k] = (ew - k * m[k - 1]) / w;
    return m;
  }
  const int top = n_max + 60;
  double cur = std::exp(std::max(w, 0.0) + shift) / (top + 1);
  for (int k = top; k > 0; --k) {
    cur = (ew - w * cur) / k;
    if (k - 1 <= n_max) m[static_cast<std::size_t>(k - 1)] = cur;
  }
  return m;
}

// exp(shift) E(z, t)
Complex shifted_exp_integral(Complex z, double t, double shift) {
  if (std::abs(z * t) < 0.1) return std::exp(shift) * exp_integral(z, t);
  return (std::exp(z * t + shift) - std::exp(shift)) / z;
}

// exp(-decay t1) integral_0^t1 exp(u t) (cosh(2 beta t) - 1) / (2 beta^2) dt
double sinh_weight_integral(double u, Complex beta, double t1, double decay) {
  const Complex s = beta * beta;
  const double shift = -decay * t1;
  if (std::abs(beta) * t1 < kSmallBeta) {
    constexpr int kTerms = 8;
    const auto m = unit_moments(u * t1, shift, 2 * kTerms);
    double sum = 0.0;
    Complex s_pow = 1.0;
    double four_pow = 4.0;
    double fact = 2.0;  // (2k)!
    for (int k = 1; k <= kTerms; ++k) {
      if (k > 1) fact *= (2.0 * k - 1.0) * (2.0 * k);
      sum += (four_pow * s_pow).real() / (2.0 * fact) * std::pow(t1, 2 * k + 1) * m[2 * k];
      s_pow *= s;
      four_pow *= 4.0;
    }
    return sum;
  }
  const Complex h = 2.0 * beta;
  const Complex dd = shifted_exp_integral(u + h, t1, shift) +
                     shifted_exp_integral(u - h, t1, shift) -
                     2.0 * shifted_exp_integral(u, t1, shift);
  return (dd / (4.0 * s)).real();
}

// exp(-lambda t) sinh(beta t) / beta, evaluated without overflow for large
// |beta t|.
Complex damped_sinh(Complex lambda, Complex beta, double t) {
  if (std::abs(beta * t) < 1.0) return t * std::exp(-lambda * t) * sinhc(beta * t);
  return (std::exp((beta - lambda) * t) - std::exp(-(beta + lambda) * t)) / (2.0 * beta);
}

}  // namespace

Complex exp_integral(Complex z, double t) {
  const Complex w = z * t;
  if (std::abs(w) < 0.1) {
    Complex term = 1.0, sum = 1.0;
    for (int k = 1; k < 14; ++k) {
      term *= w / static_cast<double>(k + 1);
      sum += term;
    }
    return t * sum;
  }
  return (std::exp(w) - 1.0) / z;
}

Complex sinhc(Complex z) {
  if (std::abs(z) < 1e-3) {
    const Complex z2 = z * z;
    return 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sinh(z) / z;
}

Intermediates intermediates(const DiamondParams& p, const Options& options) {
  const double d = validated_denominator(p);
  const double alpha_den = options.alpha == AlphaDenominator::consistent
                               ? d
                               : p.gamma1 * p.gamma2 + p.omega_e * p.omega_e;
  if (alpha_den == 0.0) throw std::domain_error("alpha denominator vanishes");
  const double kappa = p.kappa();
  const double g2 = p.g * p.g, o1 = p.omega1 * p.omega1, oe = p.omega_e * p.omega_e;

  Intermediates r;
  r.alpha = 4.0 * p.g * p.omega_e * p.omega1 / alpha_den;
  const double x = d * (kappa + p.gamma3) - 4.0 * p.gamma2 * o1 + 4.0 * g2 * p.gamma1;
  r.beta = 0.25 * std::sqrt(Complex(x * x - 256.0 * g2 * o1 * oe)) / d;
  r.lambda = (g2 * p.gamma1 + o1 * p.gamma2) / d + (kappa + p.gamma3) / 4.0;
  r.depletion = 2.0 * p.gamma2 * o1 / d;
  r.damping = 2.0 * g2 * p.gamma1 / d + (kappa + p.gamma3) / 2.0;
  r.coupling = 4.0 * p.g * p.omega_e * p.omega1 / d;
  if (p.omega1 > 0.3 * std::sqrt(2.0) * p.omega_e) {
    std::ostringstream msg;
    msg << "adiabatic elimination questionable: Omega_1 = " << p.omega1
        << " exceeds 0.3 sqrt(2) Omega_e = " << 0.3 * std::sqrt(2.0) * p.omega_e;
    r.warnings.push_back(msg.str());
  }
  return r;
}

Complex c2_amplitude(const DiamondParams& p, double t, const Options& options) {
  if (t < 0.0) throw std::domain_error("c2_amplitude: t must be >= 0");
  const auto r = intermediates(p, options);
  return Complex(0.0, 1.0) * r.alpha * damped_sinh(r.lambda, r.beta, t);
}

Complex c0_amplitude(const DiamondParams& p, double t, const Options& options) {
  if (t < 0.0) throw std::domain_error("c0_amplitude: t must be >= 0");
  const auto r = intermediates(p, options);
  const double half_gap = 0.5 * (r.damping - r.depletion);
  const Complex damped_cosh =
      0.5 * (std::exp((r.beta - r.lambda) * t) + std::exp(-(r.beta + r.lambda) * t));
  return damped_cosh + half_gap * damped_sinh(r.lambda, r.beta, t);
}

double rho_e3_integral(const DiamondParams& p, double t1, const Options& options) {
  if (!(t1 > 0.0)) throw std::domain_error("rho_e3_integral: t1 must be positive");
  const auto r = intermediates(p, options);
  const double kappa = p.kappa();
  if (kappa == 0.0 || r.alpha == 0.0) return 0.0;
  const double u = p.gamma3 - 2.0 * r.lambda.real();
  return kappa * std::norm(r.alpha) * sinh_weight_integral(u, r.beta, t1, p.gamma3);
}

double fidelity_closed_form(const DiamondParams& p, double t1, const Options& options) {
  if (!(t1 > 0.0)) throw std::domain_error("fidelity_closed_form: t1 must be positive");
  const auto r = intermediates(p, options);
  if (r.alpha == 0.0) return 0.0;
  const double kappa = p.kappa();
  const double g3 = p.gamma3;
  const Complex beta = r.beta, lambda = r.lambda;
  const double b2 = std::norm(beta);
  const double c2_sq = std::norm(r.alpha) * std::norm(damped_sinh(lambda, beta, t1));

  const Complex i(0.0, 1.0);
  const Complex lp = lambda - i * beta.imag(), lm = lambda + i * beta.imag();
  const Complex u = 2.0 * lambda - g3;
  const std::array<Complex, 4> rates = {lp, lm, lambda - beta.real(), lambda + beta.real()};
  const Complex den5 = (beta * beta - u * u) * (beta * beta - u * u) -
                       2.0 * (beta * beta + u * u) * std::conj(beta) * std::conj(beta) +
                       std::pow(std::conj(beta), 4);
  bool degenerate = std::abs(beta) * t1 < kSmallBeta || std::abs(den5) < kDegenerate;
  for (const auto& rate : rates) degenerate = degenerate || std::abs(2.0 * rate - g3) < kDegenerate;
  if (degenerate) return rho_e3_integral(p, t1, options) + c2_sq;

  auto term = [&](Complex rate) { return std::exp(-2.0 * rate * t1) / (2.0 * rate - g3); };
  const Complex bracket = term(rates[0]) + term(rates[1]) - term(rates[2]) - term(rates[3]) +
                          8.0 * b2 * u * std::exp(-g3 * t1) / den5;
  return (kappa * std::norm(r.alpha) / (4.0 * b2) * bracket).real() + c2_sq;
}

BadCavity fidelity_bad_cavity(const DiamondParams& p, double t1) {
  if (t1 < 0.0) throw std::domain_error("fidelity_bad_cavity: t1 must be >= 0");
  BadCavity out;
  const double kappa = p.kappa();
  const double scale =
      std::max({p.g, p.omega1, p.omega_e, p.gamma1, p.gamma2, p.gamma3});
  if (kappa < 50.0 * scale) {
    std::ostringstream msg;
    msg << "bad-cavity limit questionable: kappa = " << kappa << " < 50 x " << scale;
    out.warnings.push_back(msg.str());
  }
  const double g2 = p.g * p.g, o1 = p.omega1 * p.omega1, oe = p.omega_e * p.omega_e;
  const double den1 = 4.0 * g2 * p.gamma1 + p.gamma1 * p.gamma2 * kappa + 4.0 * kappa * oe;
  if (den1 == 0.0) throw std::domain_error("bad-cavity denominator vanishes");
  const double rate = 4.0 * (4.0 * g2 + p.gamma2 * kappa) * o1 / den1;
  // The second denominator equals den1 (gamma3 - rate), so the difference of
  // exponentials is written as exp(-gamma3 t1) E(gamma3 - rate, t1).
  const double pre = 64.0 * g2 * kappa * o1 * oe / (den1 * den1);
  out.fidelity = pre * std::exp(-p.gamma3 * t1) * exp_integral(p.gamma3 - rate, t1).real();
  return out;
}

ScaledDrives scaling_parameters(const ScalingChoice& choice, double gamma1, double gamma2,
                                double gamma3) {
  if (!(choice.c > 1.0)) throw std::domain_error("scaling choice needs C > 1");
  if (!(gamma1 > 0.0)) throw std::domain_error("scaling choice needs gamma1 > 0");
  ScaledDrives out;
  out.omega1 = choice.a * choice.c * gamma1;
  out.omega_e = choice.c * gamma2;
  out.t1 = std::log(choice.c) / (choice.c * gamma1);
  if (gamma2 + gamma3 > 0.0 && 4.0 * choice.a * choice.a < gamma2 / (gamma2 + gamma3)) {
    std::ostringstream msg;
    msg << "4 a^2 = " << 4.0 * choice.a * choice.a << " < gamma2 / (gamma2 + gamma3) = "
        << gamma2 / (gamma2 + gamma3) << "; ln C / C error scaling not guaranteed";
    out.warnings.push_back(msg.str());
  }
  return out;
}

}  // namespace diamond::analytic
