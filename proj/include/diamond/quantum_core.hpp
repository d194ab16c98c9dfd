#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

// Dense open-quantum-system engine: operators, piecewise time-dependent
// Hamiltonians, Lindblad master-equation and no-jump propagation.
//
// Units are whatever the caller picks for rates; time is the inverse of that
// unit. The protocol models in this library use a reference decay rate gamma.
namespace diamond {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Integration failure; carries the simulation time at which it happened.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double time);
  double time() const { return time_; }

 private:
  double time_;
};

inline constexpr double kHermitianTolerance = 1e-12;

class Operator {
 public:
  Operator() = default;
  explicit Operator(Matrix entries);

  static Operator zero(Index dim);
  static Operator identity(Index dim);
  static Operator projector(Index dim, Index i);
  // amplitude * |to><from|
  static Operator transition(Index dim, Index to, Index from, Complex amplitude = 1.0);
  // Tagged Hermitian; throws InvariantError when max|H - H^dagger| > 1e-12.
  static Operator hermitian(Matrix entries);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  bool hermitian_tagged() const { return hermitian_; }
  double hermiticity_violation() const;

  Operator adjoint() const;
  // Adds the Hermitian conjugate and tags the result.
  Operator plus_adjoint() const;

  Operator& operator+=(const Operator& other);
  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator*(Complex s, const Operator& a);
  friend Operator operator*(double s, const Operator& a);

 private:
  Matrix m_;
  bool hermitian_ = false;
};

// One jump operator L (units sqrt(rate)). Stored sparse because jump
// operators in the protocol models touch a handful of basis states.
// An absorbing term removes population from the modeled space: only the
// -1/2{L^dagger L, rho} part is applied, the recycling L rho L^dagger is not.
class LindbladTerm {
 public:
  LindbladTerm(const Operator& jump, std::string label = {}, bool absorbing = false);
  LindbladTerm(SparseMatrix jump, std::string label = {}, bool absorbing = false);

  Index dim() const { return jump_.rows(); }
  const SparseMatrix& sparse() const { return jump_; }
  Operator dense() const;
  const std::string& label() const { return label_; }
  bool absorbing() const { return absorbing_; }
  // Total rate out of basis state i, i.e. (L^dagger L)_ii.
  double rate_from(Index i) const;

 private:
  SparseMatrix jump_;
  std::string label_;
  bool absorbing_ = false;
};

class DensityMatrix {
 public:
  inline static constexpr double kHermitianTol = 1e-10;
  inline static constexpr double kTraceSlack = 1e-9;
  inline static constexpr double kPositivityTol = 1e-8;

  // Validates every invariant; throws InvariantError.
  explicit DensityMatrix(Matrix entries);

  static DensityMatrix basis_state(Index dim, Index i);
  static DensityMatrix pure(const Vector& psi);
  // Skips validation; for integrator output where invariants are tested
  // explicitly.
  static DensityMatrix unchecked(Matrix entries);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace().real(); }
  double population(Index i) const { return m_(i, i).real(); }
  Eigen::VectorXd populations() const { return m_.diagonal().real(); }
  double min_eigenvalue() const;
  double hermiticity_violation() const;

 private:
  struct NoCheck {};
  DensityMatrix(Matrix entries, NoCheck) : m_(std::move(entries)) {}
  Matrix m_;
};

class StateVector {
 public:
  explicit StateVector(Vector amplitudes);
  static StateVector basis_state(Index dim, Index i);
  static StateVector unchecked(Vector amplitudes);

  Index dim() const { return v_.size(); }
  const Vector& amplitudes() const { return v_; }
  double norm_squared() const { return v_.squaredNorm(); }
  Eigen::VectorXd populations() const { return v_.cwiseAbs2(); }

 private:
  struct NoCheck {};
  StateVector(Vector amplitudes, NoCheck) : v_(std::move(amplitudes)) {}
  Vector v_;
};

// H(t) = sum_k f_k(t) H_k with Hermitian H_k and real coefficients, so H(t)
// is Hermitian by construction. Breakpoints mark discontinuities of the
// coefficients; the integrators never step across one and evaluate the
// coefficients one-sidedly inside each segment.
class Hamiltonian {
 public:
  using Coefficient = std::function<double(double)>;
  struct Term {
    Operator op;
    Coefficient coefficient;
  };

  explicit Hamiltonian(Index dim);
  static Hamiltonian constant(const Operator& h);

  Hamiltonian& add(const Operator& op, Coefficient coefficient);
  Hamiltonian& add(const Operator& op);
  Hamiltonian& add_breakpoint(double t);

  Index dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  Operator operator()(double t) const;
  // -H(t), used for costate propagation backwards in time.
  Hamiltonian time_reversed(double t_end) const;

 private:
  Index dim_;
  std::vector<Term> terms_;
  std::vector<double> breakpoints_;
};

struct IntegratorOptions {
  double tolerance = 1e-8;  // relative; valid range [1e-12, 1e-4]
  double absolute_tolerance = -1.0;  // negative: same as tolerance
  double max_step = 0.0;  // 0: unlimited
  bool store_states = true;
  bool record_steps = true;
  std::size_t max_steps = 5'000'000;
  std::vector<std::pair<std::string, Operator>> observables;
};

template <typename State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;  // empty if store_states == false
  std::map<std::string, std::vector<double>> observables;
  // Populations (diagonal / |amplitude|^2) at every accepted step.
  std::vector<double> step_times;
  std::vector<Eigen::VectorXd> step_populations;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;

  const State& final_state() const { return states.back(); }
};

using MasterTrajectory = Trajectory<DensityMatrix>;
using NoJumpTrajectory = Trajectory<StateVector>;

// Lindblad master equation
//   drho/dt = -i[H, rho] + sum_i (L_i rho L_i^dagger - 1/2 {L_i^dagger L_i, rho})
// with an embedded Dormand-Prince 5(4) pair. `grid` must be strictly
// increasing; integration starts at grid.front() from rho0.
MasterTrajectory evolve_master(const DensityMatrix& rho0, const Hamiltonian& hamiltonian,
                               const std::vector<LindbladTerm>& terms,
                               const std::vector<double>& grid,
                               const IntegratorOptions& options = {});

// No-jump branch: d psi/dt = -i H_nj psi, H_nj = H - (i/2) sum L^dagger L,
// without renormalisation, so |psi|^2 is the probability that no jump has
// occurred.
NoJumpTrajectory evolve_no_jump(const StateVector& psi0, const Hamiltonian& hamiltonian,
                                const std::vector<LindbladTerm>& terms,
                                const std::vector<double>& grid,
                                const IntegratorOptions& options = {});

// Weight of the no-jump trajectories whose first jump is terms[jump] and
// which then reach basis state `target` at segments.back() without a further
// jump:
//   transfer = integral |<chi(s)| L psi(s)>|^2 ds,
// where psi is the no-jump state and chi is propagated backwards from
// `target` under the adjoint no-jump generator. jump_probability is the
// integral of |L psi(s)|^2. Each interval between consecutive `segments`
// entries (which should include the Hamiltonian breakpoints) is integrated
// with composite Simpson over `intervals` subintervals. `forward` holds the
// no-jump states at `output_times`.
struct JumpTransfer {
  double transfer = 0.0;
  double jump_probability = 0.0;
  NoJumpTrajectory forward;
};

JumpTransfer first_jump_transfer(const StateVector& psi0, const Hamiltonian& hamiltonian,
                                 const std::vector<LindbladTerm>& terms, std::size_t jump,
                                 Index target, const std::vector<double>& segments,
                                 std::size_t intervals, const std::vector<double>& output_times,
                                 const IntegratorOptions& options = {});

Complex expectation(const DensityMatrix& rho, const Operator& op);
Complex expectation(const StateVector& psi, const Operator& op);

// Evenly spaced grid with `points` entries, both ends included.
std::vector<double> linear_grid(double t0, double t1, std::size_t points);

}  // namespace diamond
