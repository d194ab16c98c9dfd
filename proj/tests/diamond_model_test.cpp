#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "diamond/diamond_model.hpp"
#include "diamond/optimizer.hpp"

using namespace diamond;

namespace {

// C = 10, kappa = 2000 gamma, gamma_i = gamma, pulses close to the optimum.
DiamondParams c10_params() {
  DiamondParams p;
  p.g = 200.0;
  p.kappa_f = 1000.0;
  p.kappa_l = 1000.0;
  p.omega1 = 28.1;
  p.omega_e = 40.5;
  p.omega2 = 100.0;
  p.t1 = 0.0999;
  p.t2 = p.t1 + 0.5 * std::numbers::pi / p.omega2;
  return p;
}

Complex element(const Operator& h, const DiamondSpace& s, Level to, int to_ph, Level from,
                int from_ph) {
  return h.matrix()(s.index(to, to_ph), s.index(from, from_ph));
}

bool is_dump(Level l) { return l == Level::d1 || l == Level::d2 || l == Level::d3; }

}  // namespace

TEST_CASE("basis index map is a bijection within the photon truncation") {
  for (int n : {1, 2, 3}) {
    const DiamondSpace space(n);
    for (Index i = 0; i < space.dim(); ++i) {
      const auto& s = space.state(i);
      CHECK(s.cavity + s.fiber + s.lost <= n);
      CHECK(space.index(s.atom, s.cavity, s.fiber, s.lost) == i);
    }
  }
  const DiamondSpace one(1);
  CHECK(one.dim() == 8 * 4);
  CHECK_THROWS_AS(one.index(Level::ground0, 1, 1, 0), DimensionError);
  CHECK_THROWS_AS(DiamondSpace(0), DimensionError);
}

TEST_CASE("Hamiltonian matrix elements follow the square pulse schedule") {
  const auto p = c10_params();
  const DiamondSpace space(1);
  const auto before = build_hamiltonian(p, 0.5 * p.t1, space);
  CHECK(element(before, space, Level::e1, 0, Level::ground0, 0) == Complex(p.omega1));
  CHECK(element(before, space, Level::ground0, 0, Level::e3, 0) == Complex(0.0));
  CHECK(element(before, space, Level::e2, 0, Level::e1, 0) == Complex(p.omega_e));
  CHECK(element(before, space, Level::e3, 1, Level::e2, 0) == Complex(p.g));
  CHECK(before.hermiticity_violation() == 0.0);

  const auto during = build_hamiltonian(p, 0.5 * (p.t1 + p.t2), space);
  CHECK(element(during, space, Level::e1, 0, Level::ground0, 0) == Complex(0.0));
  CHECK(element(during, space, Level::ground0, 0, Level::e3, 0) == Complex(p.omega2));

  const auto after = build_hamiltonian(p, 2.0 * p.t2, space);
  CHECK(element(after, space, Level::ground0, 0, Level::e3, 0) == Complex(0.0));

  DiamondParams zero = p;
  zero.g = zero.omega1 = zero.omega_e = zero.omega2 = 0.0;
  CHECK(build_hamiltonian(zero, 0.01, space).matrix().cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(build_hamiltonian(p, -1.0, space), std::invalid_argument);
}

TEST_CASE("photon creation carries the sqrt(n + 1) factor") {
  const auto p = c10_params();
  const DiamondSpace space(2);
  const auto h = build_hamiltonian(p, 0.0, space);
  CHECK(std::abs(element(h, space, Level::e3, 2, Level::e2, 1) - p.g * std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("dump levels and the uncoupled ground state have no outgoing couplings") {
  const auto p = c10_params();
  const DiamondSpace space(1);
  const auto h = build_hamiltonian(p, 0.01, space);
  const auto terms = build_lindblads(p, space);
  for (Index i = 0; i < space.dim(); ++i) {
    const auto a = space.state(i).atom;
    if (!is_dump(a) && a != Level::ground1) continue;
    CHECK(h.matrix().col(i).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& t : terms)
      if (space.state(i).cavity == 0) CHECK(t.rate_from(i) == 0.0);
  }
}

TEST_CASE("Lindblad channels and their rates") {
  auto p = c10_params();
  const DiamondSpace space(1);
  const auto terms = build_lindblads(p, space);
  REQUIRE(terms.size() == 5);
  CHECK(terms[0].label() == "gamma1");
  CHECK(terms[3].label() == "fiber");
  CHECK(terms[4].label() == "loss");
  CHECK(terms[0].rate_from(space.index(Level::e1)) == doctest::Approx(1.0));
  CHECK(terms[1].rate_from(space.index(Level::e2)) == doctest::Approx(1.0));
  CHECK(terms[2].rate_from(space.index(Level::e3)) == doctest::Approx(1.0));
  const Index photon = space.index(Level::e3, 1);
  CHECK(terms[3].rate_from(photon) == doctest::Approx(1000.0));
  CHECK(terms[4].rate_from(photon) == doctest::Approx(1000.0));
  CHECK(terms[3].rate_from(photon) + terms[4].rate_from(photon) == doctest::Approx(2000.0));

  p.gamma1 = p.gamma2 = p.gamma3 = 0.0;
  p.kappa_l = 0.0;
  const auto only_fiber = build_lindblads(p, space);
  for (std::size_t k = 0; k < only_fiber.size(); ++k)
    CHECK((only_fiber[k].sparse().nonZeros() > 0) == (k == 3));
}

TEST_CASE("parameter validation") {
  auto p = c10_params();
  CHECK_NOTHROW(p.validate());
  p.gamma2 = -1.0;
  CHECK_THROWS_AS(p.validate(), InvariantError);
  p = c10_params();
  p.kappa_f = p.kappa_l = 0.0;
  CHECK_THROWS_AS(p.validate(), InvariantError);
  p = c10_params();
  p.t2 = p.t1;
  CHECK_THROWS_AS(simulate_cycle(p), InvariantError);
}

TEST_CASE("no photon without cavity coupling or without the first drive") {
  for (auto engine : {Engine::master, Engine::no_jump}) {
    auto p = c10_params();
    p.g = 0.0;
    const auto r = simulate_cycle(p, engine);
    CHECK(r.rho_0_lambda == 0.0);
    CHECK(r.fidelity == 0.0);

    p = c10_params();
    p.omega1 = 0.0;
    const auto q = simulate_cycle(p, engine);
    CHECK(q.rho_0_lambda == 0.0);
    // |0> is untouched until the Omega_2 pulse starts at t1.
    REQUIRE(q.times[1] == p.t1);
    CHECK(q.populations.at("pop_0")[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.populations.at("fiber_record").back() == 0.0);
  }
}

TEST_CASE("cooperativity definition and inverse") {
  CHECK(cooperativity(std::sqrt(6.0), 3.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(coupling_for_cooperativity(10.0, 2000.0, 1.0, 1.0) == doctest::Approx(200.0));
  CHECK(cooperativity(4.0, 3.0, 0.5, 1.5) == doctest::Approx(4.0 * cooperativity(2.0, 3.0, 0.5, 1.5)));
  CHECK_THROWS_AS(cooperativity(1.0, 0.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(cooperativity(1.0, 1.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("C = 10 reference pulses reach F > 0.9") {
  const auto r = simulate_cycle(c10_params());
  CHECK(r.fidelity > 0.9);
  CHECK(r.fidelity <= 1.0);
  CHECK(r.success_probability == doctest::Approx(r.populations.at("fiber_record").back()));
  CHECK(r.success_probability <= 0.5 + 1e-9);
}

TEST_CASE("property: population conservation over the cycle") {
  CycleOptions o;
  o.trace_times = linear_grid(0.0, c10_params().t2, 60);
  const auto r = simulate_cycle(c10_params(), Engine::master, o);
  const auto& m = r.populations;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    CHECK(std::abs(m.at("norm")[i] - 1.0) < 1e-6);
    const double atomic = m.at("pop_0")[i] + m.at("pop_e1")[i] + m.at("pop_e2")[i] +
                          m.at("pop_e3")[i] + m.at("pop_dump")[i];
    CHECK(std::abs(atomic - 1.0) < 1e-6);
  }
}

TEST_CASE("property: no-jump norm equals the master-equation no-jump sector") {
  // Every jump leaves the sector {no dump, no fiber or loss record} for good,
  // so the master-equation weight of that sector is the no-jump norm.
  const auto p = c10_params();
  const DiamondSpace space(1);
  const auto h = diamond_hamiltonian(p, space);
  const auto terms = build_lindblads(p, space);
  const auto grid = linear_grid(0.0, p.t2, 40);
  IntegratorOptions opt;
  opt.tolerance = 1e-9;
  const auto master =
      evolve_master(DensityMatrix::basis_state(space.dim(), space.index(Level::ground0)), h, terms,
                    grid, opt);
  const auto nj = evolve_no_jump(StateVector::basis_state(space.dim(), space.index(Level::ground0)),
                                 h, terms, grid, opt);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sector = 0.0;
    for (Index i = 0; i < space.dim(); ++i) {
      const auto& s = space.state(i);
      if (!is_dump(s.atom) && s.fiber == 0 && s.lost == 0) sector += master.states[k].population(i);
    }
    CHECK(std::abs(nj.states[k].norm_squared() - sector) < 1e-6);
  }
}

TEST_CASE("property: a second photon does not change the fidelity") {
  CycleOptions two;
  two.max_photons = 2;
  const double f1 = simulate_cycle(c10_params()).fidelity;
  const double f2 = simulate_cycle(c10_params(), Engine::master, two).fidelity;
  CHECK(std::abs(f1 - f2) <= 1e-6);
}

TEST_CASE("property: master and no-jump fidelities agree") {
  const double fm = simulate_cycle(c10_params(), Engine::master).fidelity;
  const double fn = simulate_cycle(c10_params(), Engine::no_jump).fidelity;
  CHECK(std::abs(fm - fn) <= 1e-4);
}

TEST_CASE("scaled start follows the scaling choice") {
  RateRatios r;
  const auto p = scaled_start(10.0, r, 0.5);
  CHECK(p.g == doctest::Approx(200.0));
  CHECK(p.omega1 == doctest::Approx(5.0));
  CHECK(p.omega_e == doctest::Approx(10.0));
  CHECK(p.t1 == doctest::Approx(std::log(10.0) / 10.0));
  CHECK(p.kappa_f == doctest::Approx(1000.0));
  CHECK(p.kappa() == doctest::Approx(2000.0));
  CHECK_THROWS_AS(scaled_start(0.0, r), std::invalid_argument);
}

TEST_CASE("sweep rows are sorted, duplicates identical and independent of threads") {
  // Cheap stand-in optimizer: one evaluation at the start point.
  const PulseOptimizer probe = [](const DiamondParams& start, const FidelityObjective& f) {
    return PulseSearch{start, f(start), 1, true};
  };
  const RateRatios rates;
  const auto rows = sweep_error_vs_cooperativity({30.0, 10.0, 30.0}, rates, probe);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].cooperativity == 10.0);
  CHECK(rows[1].cooperativity == 30.0);
  CHECK(rows[1].error == rows[2].error);
  CHECK(rows[1].params.omega1 == rows[2].params.omega1);
  const auto threaded = sweep_error_vs_cooperativity({30.0, 10.0, 30.0}, rates, probe, {}, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(threaded[i].error == rows[i].error);
  CHECK_THROWS_AS(sweep_error_vs_cooperativity({-1.0}, rates, probe), std::invalid_argument);
}

TEST_CASE("sweep reports a failing row's exception") {
  const PulseOptimizer broken = [](const DiamondParams&, const FidelityObjective&) -> PulseSearch {
    throw NumericalError("synthetic", 0.5);
  };
  CHECK_THROWS_AS(sweep_error_vs_cooperativity({10.0, 20.0}, RateRatios{}, broken, {}, 2),
                  NumericalError);
}

TEST_CASE("property: optimised fidelity is non-decreasing in C") {
  const auto rows =
      sweep_error_vs_cooperativity({5.0, 10.0, 20.0}, RateRatios{}, make_pulse_optimizer());
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(1.0 - rows[i].error >= 1.0 - rows[i - 1].error - 0.005);
  CHECK(rows[1].error < 0.1);
}
