#include "diamond/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace diamond {

namespace {

constexpr double kWorst = -std::numeric_limits<double>::infinity();

class BoxMap {
 public:
  explicit BoxMap(const Box& box) : box_(box) {
    if (box.lower.size() != box.upper.size() || box.lower.empty())
      throw std::invalid_argument("optimizer box: lower/upper size mismatch or empty");
    for (std::size_t i = 0; i < box.lower.size(); ++i)
      if (!std::isfinite(box.lower[i]) || !std::isfinite(box.upper[i]) ||
          !(box.upper[i] >= box.lower[i]))
        throw std::invalid_argument("optimizer box: bounds must be finite and ordered");
  }
  std::size_t dim() const { return box_.lower.size(); }
  std::vector<double> to_box(const std::vector<double>& u) const {
    std::vector<double> x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      x[i] = box_.lower[i] + std::clamp(u[i], 0.0, 1.0) * (box_.upper[i] - box_.lower[i]);
    return x;
  }
  std::vector<double> to_unit(const std::vector<double>& x) const {
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = box_.upper[i] - box_.lower[i];
      u[i] = w > 0.0 ? std::clamp((x[i] - box_.lower[i]) / w, 0.0, 1.0) : 0.0;
    }
    return u;
  }

 private:
  const Box& box_;
};

struct Vertex {
  std::vector<double> u;
  double f;
};

}  // namespace

OptimizationResult maximize(const std::function<double(const std::vector<double>&)>& objective,
                            const std::vector<double>& start, const Box& box,
                            const OptimizerSettings& settings) {
  const BoxMap map(box);
  const std::size_t n = map.dim();
  if (start.size() != n) throw std::invalid_argument("optimizer start has wrong dimension");

  OptimizationResult res;
  bool budget_hit = false;
  auto eval = [&](const std::vector<double>& u) {
    if (res.evaluations >= settings.max_evaluations) {
      budget_hit = true;
      return kWorst;
    }
    ++res.evaluations;
    double f;
    try {
      f = objective(map.to_box(u));
    } catch (const std::exception&) {
      f = kWorst;
    }
    if (!std::isfinite(f)) f = kWorst;
    if (res.best_x.empty() || f > res.best_value) {
      res.best_value = f;
      res.best_x = map.to_box(u);
    }
    return f;
  };

  Vertex best{map.to_unit(start), 0.0};
  best.f = eval(best.u);

  // Coarse full-factorial grid.
  if (settings.grid_points > 1) {
    const auto g = static_cast<std::size_t>(settings.grid_points);
    std::vector<std::size_t> idx(n, 0);
    while (true) {
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i)
        u[i] = (static_cast<double>(idx[i]) + 0.5) / static_cast<double>(g);
      const double f = eval(u);
      if (budget_hit) break;
      if (f > best.f) best = {u, f};
      std::size_t k = 0;
      while (k < n && ++idx[k] == g) idx[k++] = 0;
      if (k == n) break;
    }
  }

  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);

  for (int round = 0; round <= settings.restarts && !budget_hit; ++round) {
    std::vector<Vertex> s;
    s.push_back(best);
    for (std::size_t i = 0; i < n; ++i) {
      Vertex v = best;
      const double step = settings.initial_step * jitter(rng);
      v.u[i] += (v.u[i] + step <= 1.0) ? step : -step;
      v.f = eval(v.u);
      s.push_back(std::move(v));
    }
    bool converged = false;
    while (!budget_hit) {
      std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f > b.f; });
      res.trace.push_back(s.front().f);
      double spread = 0.0;
      for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t i = 0; i < n; ++i) spread = std::max(spread, std::abs(s[k].u[i] - s[0].u[i]));
      const double fspread = s.front().f - s.back().f;
      if (spread < settings.x_tolerance ||
          (std::isfinite(fspread) && fspread < settings.f_tolerance)) {
        converged = true;
        break;
      }
      std::vector<double> centroid(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) centroid[i] += s[k].u[i] / static_cast<double>(n);
      auto along = [&](double t) {
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i)
          u[i] = std::clamp(centroid[i] + t * (s[n].u[i] - centroid[i]), 0.0, 1.0);
        return u;
      };
      Vertex r{along(-1.0), 0.0};
      r.f = eval(r.u);
      if (r.f > s[0].f) {
        Vertex e{along(-2.0), 0.0};
        e.f = eval(e.u);
        s[n] = e.f > r.f ? std::move(e) : std::move(r);
      } else if (r.f > s[n - 1].f) {
        s[n] = std::move(r);
      } else {
        Vertex c{r.f > s[n].f ? along(-0.5) : along(0.5), 0.0};
        c.f = eval(c.u);
        if (c.f > std::max(r.f, s[n].f)) {
          s[n] = std::move(c);
        } else {
          for (std::size_t k = 1; k <= n; ++k) {
            for (std::size_t i = 0; i < n; ++i) s[k].u[i] = 0.5 * (s[k].u[i] + s[0].u[i]);
            s[k].f = eval(s[k].u);
          }
        }
      }
    }
    std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f > b.f; });
    if (s.front().f >= best.f) best = s.front();
    res.converged = converged;
  }
  if (budget_hit) res.converged = false;
  return res;
}

// ---------------------------------------------------------------------------

PulseSearch optimize_pulses(const DiamondParams& start, const FidelityObjective& objective,
                            double c_gamma3, const PulseBounds& b,
                            const OptimizerSettings& settings) {
  if (!(c_gamma3 > 0.0)) throw std::invalid_argument("optimize_pulses: C gamma3 must be positive");
  start.validate();
  const double half_pi = 0.5 * M_PI;
  // Variables: log Omega_1, log Omega_e, log Omega_2, log t1, pulse area.
  Box box;
  box.lower = {std::log(start.omega1 * b.omega1_factor_low),
               std::log(start.omega_e * b.omega_e_factor_low), std::log(c_gamma3 * b.omega2_c_low),
               std::log(start.t1 * b.t1_factor_low), b.area_low};
  box.upper = {std::log(start.omega1 * b.omega1_factor_high),
               std::log(start.omega_e * b.omega_e_factor_high),
               std::log(c_gamma3 * b.omega2_c_high), std::log(start.t1 * b.t1_factor_high),
               b.area_high};
  if (b.fixed_times) {
    box.lower.resize(3);
    box.upper.resize(3);
  }
  auto to_params = [&](const std::vector<double>& x) {
    DiamondParams p = start;
    p.omega1 = std::exp(x[0]);
    p.omega_e = std::exp(x[1]);
    p.omega2 = std::exp(x[2]);
    if (!b.fixed_times) {
      p.t1 = std::exp(x[3]);
      p.t2 = p.t1 + x[4] * half_pi / p.omega2;
    }
    return p;
  };
  const double o2 = std::clamp(start.omega2, c_gamma3 * b.omega2_c_low, c_gamma3 * b.omega2_c_high);
  const double area = std::clamp(start.omega2 * (start.t2 - start.t1) / half_pi, b.area_low, b.area_high);
  std::vector<double> x0 = {std::log(start.omega1), std::log(start.omega_e), std::log(o2)};
  if (!b.fixed_times) x0.insert(x0.end(), {std::log(start.t1), area});
  const auto r = maximize([&](const std::vector<double>& x) { return objective(to_params(x)); },
                          x0, box, settings);
  return {to_params(r.best_x), r.best_value, r.evaluations, r.converged};
}

PulseOptimizer make_pulse_optimizer(const PulseBounds& bounds, const OptimizerSettings& settings) {
  return [bounds, settings](const DiamondParams& start, const FidelityObjective& objective) {
    const double c = cooperativity(start.g, start.kappa(), start.gamma2, start.gamma3);
    return optimize_pulses(start, objective, c * start.gamma3, bounds, settings);
  };
}

}  // namespace diamond
