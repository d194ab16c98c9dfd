#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "diamond/quantum_core.hpp"

using namespace diamond;

namespace {

Operator two_level_drive(double omega) {
  return Operator::hermitian(omega * (Operator::transition(2, 1, 0).matrix() +
                                      Operator::transition(2, 0, 1).matrix()));
}

Matrix random_density(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix a(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) a(i, j) = Complex(n(rng), n(rng));
  Matrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

Matrix random_hermitian(Index dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n;
  Matrix a(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) a(i, j) = Complex(n(rng), n(rng));
  return scale * 0.5 * (a + a.adjoint());
}

// Three levels: |0> driven to |2>, |2> decays to |1> and to |0>.
struct Lambda3 {
  Hamiltonian h{3};
  std::vector<LindbladTerm> terms;
  Lambda3() {
    h.add(Operator::transition(3, 2, 0, 1.7).plus_adjoint());
    terms.emplace_back(Operator::transition(3, 1, 2, std::sqrt(0.8)), "to1");
    terms.emplace_back(Operator::transition(3, 0, 2, std::sqrt(0.5)), "to0");
  }
};

}  // namespace

TEST_CASE("operator constructors and Hermitian tagging") {
  const auto id = Operator::identity(3);
  CHECK(id.hermitian_tagged());
  CHECK(id.matrix().isIdentity());
  CHECK(Operator::projector(3, 1).matrix()(1, 1) == Complex(1.0));
  const auto t = Operator::transition(3, 2, 0, Complex(0.0, 2.0));
  CHECK(t.matrix()(2, 0) == Complex(0.0, 2.0));
  CHECK_FALSE(t.hermitian_tagged());
  const auto h = t.plus_adjoint();
  CHECK(h.hermitian_tagged());
  CHECK(h.hermiticity_violation() == 0.0);

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(Operator::hermitian(bad), InvariantError);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(Operator{bad}, InvariantError);
  CHECK_THROWS_AS(Operator(Matrix::Zero(2, 3)), DimensionError);
  CHECK_THROWS_AS(Operator::transition(2, 2, 0), DimensionError);
  CHECK_THROWS_AS(Operator::identity(2) * Operator::identity(3), DimensionError);
}

TEST_CASE("density matrix and state vector invariants") {
  CHECK_NOTHROW(DensityMatrix::basis_state(3, 2));
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 0.6;
  m(1, 1) = 0.6;
  CHECK_THROWS_AS(DensityMatrix{m}, InvariantError);  // trace > 1
  m(1, 1) = -0.1;
  CHECK_THROWS_AS(DensityMatrix{m}, InvariantError);  // negative eigenvalue
  m(1, 1) = 0.3;
  m(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix{m}, InvariantError);  // not Hermitian
  m(1, 0) = 0.1;
  CHECK_NOTHROW(DensityMatrix{m});
  // Sub-normalised states are allowed.
  CHECK(DensityMatrix(0.5 * Matrix::Identity(2, 2) * 0.5).trace() == doctest::Approx(0.5));

  Vector v = Vector::Zero(2);
  CHECK_THROWS_AS(StateVector{v}, InvariantError);
  v(0) = 1.1;
  CHECK_THROWS_AS(StateVector{v}, InvariantError);
  v(0) = 0.9;
  CHECK(StateVector(v).norm_squared() == doctest::Approx(0.81));
}

TEST_CASE("expectation values") {
  const auto rho = DensityMatrix::basis_state(2, 0);
  CHECK(expectation(rho, Operator::identity(2)) == Complex(1.0));
  CHECK(expectation(rho, Operator::projector(2, 0)) == Complex(1.0));
  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const StateVector psi(plus);
  CHECK(std::abs(expectation(psi, Operator::projector(2, 1)) - 0.5) < 1e-15);
  CHECK(std::abs(expectation(DensityMatrix::pure(plus), Operator::projector(2, 1)) - 0.5) < 1e-15);

  std::mt19937_64 rng(11);
  const DensityMatrix r(random_density(4, rng));
  const auto a = Operator::hermitian(random_hermitian(4, rng, 1.0));
  CHECK(std::abs(expectation(r, a).imag()) < 1e-10);

  CHECK_THROWS_AS(expectation(rho, Operator::identity(3)), DimensionError);
  CHECK_THROWS_AS(expectation(psi, Operator::identity(3)), DimensionError);
}

TEST_CASE("zero Hamiltonian without decay leaves the state unchanged") {
  std::mt19937_64 rng(3);
  const DensityMatrix rho0(random_density(4, rng));
  const auto traj = evolve_master(rho0, Hamiltonian(4), {}, linear_grid(0.0, 5.0, 11));
  REQUIRE(traj.states.size() == 11);
  for (const auto& s : traj.states) CHECK((s.matrix() - rho0.matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("resonant Rabi pi pulse inverts a two-level system") {
  const double omega = 1.3;
  const double t = std::numbers::pi / (2.0 * omega);
  IntegratorOptions opt;
  opt.tolerance = 1e-10;
  const auto master = evolve_master(DensityMatrix::basis_state(2, 0),
                                    Hamiltonian::constant(two_level_drive(omega)), {},
                                    {0.0, t}, opt);
  CHECK(std::abs(master.final_state().population(1) - 1.0) < 1e-8);
  const auto nj = evolve_no_jump(StateVector::basis_state(2, 0),
                                 Hamiltonian::constant(two_level_drive(omega)), {}, {0.0, t}, opt);
  CHECK(std::abs(nj.final_state().populations()(1) - 1.0) < 1e-8);
}

TEST_CASE("spontaneous decay is exponential in both engines") {
  const double gamma = 2.5;
  const std::vector<LindbladTerm> terms{
      LindbladTerm(Operator::transition(2, 0, 1, std::sqrt(gamma)), "decay")};
  const double t = 1.0 / gamma;
  const auto master =
      evolve_master(DensityMatrix::basis_state(2, 1), Hamiltonian(2), terms, {0.0, t});
  CHECK(std::abs(master.final_state().population(1) - std::exp(-1.0)) < 1e-8);
  CHECK(std::abs(master.final_state().trace() - 1.0) < 1e-9);

  const auto grid = linear_grid(0.0, 2.0, 21);
  const auto nj = evolve_no_jump(StateVector::basis_state(2, 1), Hamiltonian(2), terms, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(nj.states[i].norm_squared() - std::exp(-gamma * grid[i])) < 1e-8);
}

TEST_CASE("unitary no-jump evolution keeps the norm") {
  std::mt19937_64 rng(5);
  const auto h = Hamiltonian::constant(Operator::hermitian(random_hermitian(5, rng, 3.0)));
  IntegratorOptions opt;
  opt.tolerance = 1e-11;
  const auto traj =
      evolve_no_jump(StateVector::basis_state(5, 0), h, {}, linear_grid(0.0, 4.0, 41), opt);
  for (const auto& s : traj.states) CHECK(std::abs(s.norm_squared() - 1.0) < 1e-9);
}

TEST_CASE("breakpoints give exact piecewise-constant dynamics") {
  // Drive on for t < 0.5, off afterwards: the population freezes at sin^2(omega 0.5).
  const double omega = 2.0;
  Hamiltonian h(2);
  h.add(two_level_drive(1.0), [omega](double t) { return t < 0.5 ? omega : 0.0; });
  h.add_breakpoint(0.5);
  IntegratorOptions opt;
  opt.tolerance = 1e-10;
  const auto traj = evolve_master(DensityMatrix::basis_state(2, 0), h, {}, {0.0, 0.5, 2.0}, opt);
  const double expected = std::pow(std::sin(omega * 0.5), 2);
  CHECK(std::abs(traj.states[1].population(1) - expected) < 1e-9);
  CHECK(std::abs(traj.states[2].population(1) - expected) < 1e-9);
}

TEST_CASE("integrator input validation") {
  const auto rho = DensityMatrix::basis_state(2, 0);
  const auto h = Hamiltonian::constant(two_level_drive(1.0));
  IntegratorOptions opt;
  opt.tolerance = 1e-3;
  CHECK_THROWS_AS(evolve_master(rho, h, {}, {0.0, 1.0}, opt), std::invalid_argument);
  opt.tolerance = 1e-13;
  CHECK_THROWS_AS(evolve_master(rho, h, {}, {0.0, 1.0}, opt), std::invalid_argument);
  CHECK_THROWS_AS(evolve_master(rho, h, {}, {0.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(evolve_master(rho, Hamiltonian(3), {}, {0.0, 1.0}), DimensionError);
  const std::vector<LindbladTerm> wrong{LindbladTerm(Operator::transition(3, 0, 1))};
  CHECK_THROWS_AS(evolve_master(rho, h, wrong, {0.0, 1.0}), DimensionError);
  CHECK_THROWS_AS(evolve_no_jump(StateVector::basis_state(2, 0), h, wrong, {0.0, 1.0}),
                  DimensionError);
  CHECK_THROWS_AS(Hamiltonian(2).add(Operator::transition(2, 1, 0)), InvariantError);

  opt = {};
  opt.max_steps = 3;
  try {
    evolve_master(rho, Hamiltonian::constant(two_level_drive(50.0)), {}, {0.0, 10.0}, opt);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 10.0);
  }
}

TEST_CASE("observables are recorded on the grid") {
  IntegratorOptions opt;
  opt.observables = {{"p1", Operator::projector(2, 1)}};
  const auto grid = linear_grid(0.0, 1.0, 6);
  const auto traj = evolve_master(DensityMatrix::basis_state(2, 0),
                                  Hamiltonian::constant(two_level_drive(1.0)), {}, grid, opt);
  REQUIRE(traj.observables.at("p1").size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(traj.observables.at("p1")[i] == doctest::Approx(std::pow(std::sin(grid[i]), 2)).epsilon(1e-7));
  CHECK(traj.step_times.size() == traj.accepted_steps + 1);
}

TEST_CASE("property: trace conservation and positivity with random closed dynamics") {
  std::mt19937_64 rng(2024);
  for (int draw = 0; draw < 10; ++draw) {
    const Index dim = 4;
    const auto h = Hamiltonian::constant(Operator::hermitian(random_hermitian(dim, rng, 2.0)));
    std::vector<LindbladTerm> terms;
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (Index k = 1; k < dim; ++k)
      terms.emplace_back(Operator::transition(dim, k - 1, k, std::sqrt(u(rng))));
    terms.emplace_back(Operator(std::sqrt(u(rng)) * Operator::projector(dim, 2).matrix()));
    IntegratorOptions opt;
    opt.tolerance = 1e-9;
    const auto traj =
        evolve_master(DensityMatrix(random_density(dim, rng)), h, terms, linear_grid(0.0, 3.0, 31), opt);
    for (const auto& s : traj.states) {
      CHECK(std::abs(s.trace() - 1.0) <= 10 * opt.tolerance);
      CHECK(s.min_eigenvalue() >= -1e-8);
      CHECK(s.hermiticity_violation() <= 1e-10);
    }
  }
}

TEST_CASE("property: no-jump norm plus integrated jump rates is one") {
  const Lambda3 sys;
  const auto grid = linear_grid(0.0, 4.0, 4001);
  IntegratorOptions opt;
  opt.tolerance = 1e-10;
  const auto traj = evolve_no_jump(StateVector::basis_state(3, 0), sys.h, sys.terms, grid, opt);
  // Trapezoid integral of sum_i <L_i^dagger L_i> along the no-jump state.
  double jumped = 0.0;
  auto rate = [&](std::size_t i) {
    double r = 0.0;
    for (const auto& t : sys.terms) r += (t.sparse() * traj.states[i].amplitudes()).squaredNorm();
    return r;
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) jumped += 0.5 * (rate(i - 1) + rate(i)) * (grid[i] - grid[i - 1]);
    CHECK(std::abs(traj.states[i].norm_squared() + jumped - 1.0) < 1e-6);
  }
  for (std::size_t i = 1; i < grid.size(); ++i)
    CHECK(traj.states[i].norm_squared() <= traj.states[i - 1].norm_squared() + 1e-12);
}

TEST_CASE("property: halving the maximum step leaves final populations unchanged") {
  const Lambda3 sys;
  for (double tol : {1e-8, 1e-10}) {
    IntegratorOptions a;
    a.tolerance = tol;
    a.max_step = 0.02;
    IntegratorOptions b = a;
    b.max_step = 0.01;
    const auto ra = evolve_master(DensityMatrix::basis_state(3, 0), sys.h, sys.terms, {0.0, 3.0}, a);
    const auto rb = evolve_master(DensityMatrix::basis_state(3, 0), sys.h, sys.terms, {0.0, 3.0}, b);
    const Eigen::VectorXd d = ra.final_state().populations() - rb.final_state().populations();
    CHECK(d.cwiseAbs().maxCoeff() < tol);
  }
}

TEST_CASE("first-jump transfer reproduces the decay probability") {
  // |e> -> |g> with no drive: the weight of "first jump then in |g>" is 1 - e^{-gamma T}.
  const double gamma = 1.5, T = 1.2;
  const std::vector<LindbladTerm> terms{
      LindbladTerm(Operator::transition(2, 0, 1, std::sqrt(gamma)), "decay")};
  const auto r = first_jump_transfer(StateVector::basis_state(2, 1), Hamiltonian(2), terms, 0, 0,
                                     {0.0, T}, 400, {0.0, T});
  CHECK(std::abs(r.transfer - (1.0 - std::exp(-gamma * T))) < 1e-9);
  CHECK(std::abs(r.jump_probability - (1.0 - std::exp(-gamma * T))) < 1e-9);
  CHECK(r.forward.states.size() == 2);
  CHECK_THROWS_AS(first_jump_transfer(StateVector::basis_state(2, 1), Hamiltonian(2), terms, 1, 0,
                                      {0.0, T}, 10, {0.0, T}),
                  std::invalid_argument);
}

TEST_CASE("first-jump transfer agrees with the master equation for a driven lambda system") {
  // |1> is uncoupled, so with "to1" as the only channel every trajectory that
  // reaches |1> does so by exactly one jump and the master-equation population
  // of |1> equals the first-jump transfer.
  const Lambda3 sys;
  const double T = 2.0;
  IntegratorOptions opt;
  opt.tolerance = 1e-10;
  const std::vector<LindbladTerm> single{sys.terms[0]};
  const auto m1 = evolve_master(DensityMatrix::basis_state(3, 0), sys.h, single, {0.0, T}, opt);
  const auto r = first_jump_transfer(StateVector::basis_state(3, 0), sys.h, single, 0, 1, {0.0, T},
                                     2000, {0.0, T}, opt);
  CHECK(m1.final_state().population(1) > 0.1);
  CHECK(std::abs(r.transfer - m1.final_state().population(1)) < 1e-8);
}

TEST_CASE("linear grid") {
  const auto g = linear_grid(1.0, 2.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == 2.0);
  CHECK(g[2] == doctest::Approx(1.5));
  CHECK_THROWS_AS(linear_grid(0.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(linear_grid(1.0, 1.0, 3), std::invalid_argument);
}
