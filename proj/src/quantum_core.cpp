#include "diamond/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace diamond {

NumericalError::NumericalError(const std::string& what, double time)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << what << " (t = " << time << ")";
        return os.str();
      }()),
      time_(time) {}

namespace {

bool all_finite(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << "dimension mismatch in " << what << ": " << a << " vs " << b;
    throw DimensionError(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Operator

Operator::Operator(Matrix entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols()) throw DimensionError("operator must be square");
  if (m_.rows() == 0) throw DimensionError("operator dimension must be positive");
  if (!all_finite(m_)) throw InvariantError("operator has non-finite entries");
}

Operator Operator::zero(Index dim) { return Operator(Matrix::Zero(dim, dim)); }

Operator Operator::identity(Index dim) {
  Operator op(Matrix::Identity(dim, dim));
  op.hermitian_ = true;
  return op;
}

Operator Operator::projector(Index dim, Index i) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, i) = 1.0;
  Operator op(std::move(m));
  op.hermitian_ = true;
  return op;
}

Operator Operator::transition(Index dim, Index to, Index from, Complex amplitude) {
  if (to < 0 || to >= dim || from < 0 || from >= dim)
    throw DimensionError("transition index out of range");
  Matrix m = Matrix::Zero(dim, dim);
  m(to, from) = amplitude;
  return Operator(std::move(m));
}

Operator Operator::hermitian(Matrix entries) {
  Operator op(std::move(entries));
  const double v = op.hermiticity_violation();
  if (v > kHermitianTolerance) {
    std::ostringstream os;
    os << "Hamiltonian not Hermitian: max |H - H^dagger| = " << v;
    throw InvariantError(os.str());
  }
  op.hermitian_ = true;
  return op;
}

double Operator::hermiticity_violation() const { return max_abs(m_ - m_.adjoint()); }

Operator Operator::adjoint() const {
  Operator op(Matrix(m_.adjoint()));
  op.hermitian_ = hermitian_;
  return op;
}

Operator Operator::plus_adjoint() const {
  Operator op(Matrix(m_ + m_.adjoint()));
  op.hermitian_ = true;
  return op;
}

Operator& Operator::operator+=(const Operator& other) {
  require_same_dim(dim(), other.dim(), "operator sum");
  m_ += other.m_;
  hermitian_ = hermitian_ && other.hermitian_;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_dim(a.dim(), b.dim(), "operator product");
  return Operator(Matrix(a.m_ * b.m_));
}

Operator operator*(Complex s, const Operator& a) {
  Operator op(Matrix(s * a.m_));
  op.hermitian_ = a.hermitian_ && s.imag() == 0.0;
  return op;
}

Operator operator*(double s, const Operator& a) {
  Operator op(Matrix(s * a.m_));
  op.hermitian_ = a.hermitian_;
  return op;
}

// ---------------------------------------------------------------------------
// LindbladTerm

LindbladTerm::LindbladTerm(const Operator& jump, std::string label, bool absorbing)
    : jump_(jump.matrix().sparseView()), label_(std::move(label)), absorbing_(absorbing) {
  jump_.makeCompressed();
}

LindbladTerm::LindbladTerm(SparseMatrix jump, std::string label, bool absorbing)
    : jump_(std::move(jump)), label_(std::move(label)), absorbing_(absorbing) {
  if (jump_.rows() != jump_.cols() || jump_.rows() == 0)
    throw DimensionError("jump operator must be square and non-empty");
  for (Index k = 0; k < jump_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(jump_, k); it; ++it)
      if (!std::isfinite(it.value().real()) || !std::isfinite(it.value().imag()))
        throw InvariantError("jump operator has non-finite entries");
  jump_.makeCompressed();
}

Operator LindbladTerm::dense() const { return Operator(Matrix(jump_)); }

double LindbladTerm::rate_from(Index i) const {
  double r = 0.0;
  for (Index k = 0; k < jump_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(jump_, k); it; ++it)
      if (it.col() == i) r += std::norm(it.value());
  return r;
}

// ---------------------------------------------------------------------------
// States

DensityMatrix::DensityMatrix(Matrix entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0)
    throw DimensionError("density matrix must be square and non-empty");
  if (!all_finite(m_)) throw InvariantError("density matrix has non-finite entries");
  if (hermiticity_violation() > kHermitianTol)
    throw InvariantError("density matrix not Hermitian");
  const double tr = trace();
  if (tr < -kTraceSlack || tr > 1.0 + kTraceSlack)
    throw InvariantError("density matrix trace outside [0, 1]");
  if (min_eigenvalue() < -kPositivityTol) throw InvariantError("density matrix not positive");
}

DensityMatrix DensityMatrix::basis_state(Index dim, Index i) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, i) = 1.0;
  return DensityMatrix(std::move(m), NoCheck{});
}

DensityMatrix DensityMatrix::pure(const Vector& psi) { return DensityMatrix(psi * psi.adjoint()); }

DensityMatrix DensityMatrix::unchecked(Matrix entries) {
  return DensityMatrix(std::move(entries), NoCheck{});
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::hermiticity_violation() const { return max_abs(m_ - m_.adjoint()); }

StateVector::StateVector(Vector amplitudes) : v_(std::move(amplitudes)) {
  if (v_.size() == 0) throw DimensionError("state vector must be non-empty");
  const double n = v_.squaredNorm();
  if (!std::isfinite(n)) throw InvariantError("state vector has non-finite amplitudes");
  if (!(n > 0.0) || n > 1.0 + 1e-9) throw InvariantError("state vector norm outside (0, 1]");
}

StateVector StateVector::basis_state(Index dim, Index i) {
  Vector v = Vector::Zero(dim);
  v(i) = 1.0;
  return StateVector(std::move(v), NoCheck{});
}

StateVector StateVector::unchecked(Vector amplitudes) {
  return StateVector(std::move(amplitudes), NoCheck{});
}

// ---------------------------------------------------------------------------
// Hamiltonian

Hamiltonian::Hamiltonian(Index dim) : dim_(dim) {
  if (dim <= 0) throw DimensionError("Hamiltonian dimension must be positive");
}

Hamiltonian Hamiltonian::constant(const Operator& h) {
  Hamiltonian H(h.dim());
  H.add(h);
  return H;
}

Hamiltonian& Hamiltonian::add(const Operator& op, Coefficient coefficient) {
  require_same_dim(dim_, op.dim(), "Hamiltonian term");
  if (!op.hermitian_tagged() && op.hermiticity_violation() > kHermitianTolerance)
    throw InvariantError("Hamiltonian term not Hermitian");
  terms_.push_back({Operator::hermitian(op.matrix()), std::move(coefficient)});
  return *this;
}

Hamiltonian& Hamiltonian::add(const Operator& op) {
  return add(op, [](double) { return 1.0; });
}

Hamiltonian& Hamiltonian::add_breakpoint(double t) {
  if (std::find(breakpoints_.begin(), breakpoints_.end(), t) == breakpoints_.end()) {
    breakpoints_.push_back(t);
    std::sort(breakpoints_.begin(), breakpoints_.end());
  }
  return *this;
}

Operator Hamiltonian::operator()(double t) const {
  Matrix m = Matrix::Zero(dim_, dim_);
  for (const auto& term : terms_) {
    const double c = term.coefficient(t);
    if (c != 0.0) m += c * term.op.matrix();
  }
  return Operator::hermitian(std::move(m));
}

Hamiltonian Hamiltonian::time_reversed(double t_end) const {
  Hamiltonian out(dim_);
  for (const auto& term : terms_) {
    auto f = term.coefficient;
    out.add(term.op, [f, t_end](double tau) { return -f(t_end - tau); });
  }
  for (double b : breakpoints_) out.add_breakpoint(t_end - b);
  return out;
}

// ---------------------------------------------------------------------------
// Integrator

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Coefficients are evaluated strictly inside [lo, hi] so that square pulses
// switching at a breakpoint are seen from the correct side.
double clamp_inside(double t, double lo, double hi) {
  if (t <= lo) return std::nextafter(lo, hi);
  if (t >= hi) return std::nextafter(hi, lo);
  return t;
}

SparseMatrix to_sparse(const Matrix& m) {
  SparseMatrix s = m.sparseView();
  s.makeCompressed();
  return s;
}

// Shared between both engines: sparse H_k and the effective non-Hermitian
// part, cached while the coefficients are unchanged.
class EffectiveHamiltonian {
 public:
  EffectiveHamiltonian(const Hamiltonian& h, const std::vector<LindbladTerm>& terms)
      : dim_(h.dim()) {
    for (const auto& term : h.terms()) {
      parts_.push_back(to_sparse(term.op.matrix()));
      coeffs_.push_back(term.coefficient);
    }
    SparseMatrix k(dim_, dim_);
    for (const auto& t : terms) {
      require_same_dim(dim_, t.dim(), "Lindblad term");
      const SparseMatrix ldag = t.sparse().adjoint();
      const SparseMatrix ldl = ldag * t.sparse();
      k += ldl;
    }
    half_k_ = Complex(0.0, -0.5) * k;
    last_.assign(parts_.size(), std::numeric_limits<double>::quiet_NaN());
  }

  const SparseMatrix& at(double t, double lo, double hi) {
    const double te = clamp_inside(t, lo, hi);
    bool changed = false;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      const double c = coeffs_[k](te);
      if (!std::isfinite(c)) throw NumericalError("non-finite Hamiltonian coefficient", t);
      if (c != last_[k]) {
        last_[k] = c;
        changed = true;
      }
    }
    if (changed || !built_) {
      SparseMatrix h = half_k_;
      for (std::size_t k = 0; k < parts_.size(); ++k)
        if (last_[k] != 0.0) h += last_[k] * parts_[k];
      h.prune(Complex(0.0));
      h.makeCompressed();
      heff_ = std::move(h);
      built_ = true;
    }
    return heff_;
  }

 private:
  Index dim_;
  std::vector<SparseMatrix> parts_;
  std::vector<Hamiltonian::Coefficient> coeffs_;
  SparseMatrix half_k_;
  SparseMatrix heff_;
  std::vector<double> last_;
  bool built_ = false;
};

class MasterRhs {
 public:
  MasterRhs(const Hamiltonian& h, const std::vector<LindbladTerm>& terms) : heff_(h, terms) {
    for (const auto& t : terms) {
      if (t.absorbing()) continue;
      std::vector<Entry> entries;
      const SparseMatrix& l = t.sparse();
      for (Index r = 0; r < l.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(l, r); it; ++it)
          entries.push_back({it.row(), it.col(), it.value()});
      recycle_.push_back(std::move(entries));
    }
  }
  void operator()(double t, double lo, double hi, const Matrix& rho, Matrix& out) {
    const SparseMatrix& h = heff_.at(t, lo, hi);
    a_.noalias() = h * rho;
    // rho H_eff^dagger = (H_eff rho)^dagger for Hermitian rho.
    out = Complex(0.0, -1.0) * a_;
    out += Complex(0.0, 1.0) * a_.adjoint();
    // L rho L^dagger entry by entry: jump operators have few entries.
    for (const auto& entries : recycle_)
      for (const Entry& i : entries)
        for (const Entry& j : entries)
          out(i.row, j.row) += i.value * std::conj(j.value) * rho(i.col, j.col);
  }

 private:
  struct Entry {
    Index row, col;
    Complex value;
  };
  EffectiveHamiltonian heff_;
  std::vector<std::vector<Entry>> recycle_;
  Matrix a_;
};

class NoJumpRhs {
 public:
  NoJumpRhs(const Hamiltonian& h, const std::vector<LindbladTerm>& terms) : heff_(h, terms) {}
  void operator()(double t, double lo, double hi, const Vector& psi, Vector& out) {
    out.noalias() = Complex(0.0, -1.0) * (heff_.at(t, lo, hi) * psi);
  }

 private:
  EffectiveHamiltonian heff_;
};

template <typename Y>
double error_norm(const Y& err, const Y& y0, const Y& y1, double atol, double rtol) {
  double acc = 0.0;
  const Index n = err.size();
  const Complex* e = err.data();
  const Complex* a = y0.data();
  const Complex* b = y1.data();
  for (Index i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    const double r = std::abs(e[i]) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

void hermitize(Matrix& m) { m = 0.5 * (m + m.adjoint()).eval(); }
void hermitize(Vector&) {}

Eigen::VectorXd pops(const Matrix& m) { return m.diagonal().real(); }
Eigen::VectorXd pops(const Vector& v) { return v.cwiseAbs2(); }

double observe(const Matrix& rho, const Operator& op) {
  return (rho.cwiseProduct(op.matrix().transpose())).sum().real();
}
double observe(const Vector& psi, const Operator& op) {
  return psi.dot(op.matrix() * psi).real();
}

template <typename State, typename Y, typename Rhs>
Trajectory<State> integrate(Y y, Rhs& rhs, const std::vector<double>& grid,
                            const std::vector<double>& breakpoints,
                            const IntegratorOptions& opt, State (*wrap)(Y)) {
  if (grid.empty()) throw std::invalid_argument("time grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("time grid not strictly increasing");
  if (!(opt.tolerance >= 1e-12 && opt.tolerance <= 1e-4))
    throw std::invalid_argument("integrator tolerance outside [1e-12, 1e-4]");
  for (const auto& [name, op] : opt.observables)
    require_same_dim(op.dim(), static_cast<Index>(y.rows()), "observable");

  const double rtol = opt.tolerance;
  const double atol = opt.absolute_tolerance > 0 ? opt.absolute_tolerance : opt.tolerance;
  const double t0 = grid.front();
  const double t_end = grid.back();

  Trajectory<State> traj;
  auto record_grid = [&](double t, const Y& state) {
    traj.times.push_back(t);
    for (const auto& [name, op] : opt.observables) traj.observables[name].push_back(observe(state, op));
    if (opt.store_states) traj.states.push_back(wrap(state));
  };
  auto record_step = [&](double t, const Y& state) {
    if (!opt.record_steps) return;
    traj.step_times.push_back(t);
    traj.step_populations.push_back(pops(state));
  };

  // Segment edges: grid points and interior breakpoints.
  std::vector<double> stops(grid.begin() + 1, grid.end());
  std::vector<double> hard;  // breakpoints, for one-sided coefficient evaluation
  for (double b : breakpoints)
    if (b > t0 && b < t_end) {
      stops.push_back(b);
      hard.push_back(b);
    }
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  record_grid(t0, y);
  record_step(t0, y);

  Y k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err;
  double t = t0;
  double h = 0.0;
  std::size_t next_grid = 1;
  for (double seg_end : stops) {
    const double seg_start = t;
    // Coefficient evaluation window: the enclosing breakpoint interval.
    double lo = t0, hi = t_end;
    for (double b : hard) {
      if (b <= seg_start) lo = b;
      if (b >= seg_end) {
        hi = b;
        break;
      }
    }
    auto f = [&](double tt, const Y& yy, Y& out) {
      rhs(tt, lo, hi, yy, out);
      ++traj.rhs_evaluations;
    };
    f(t, y, k1);
    if (h <= 0.0) {
      const double ny = y.cwiseAbs().maxCoeff();
      const double nf = k1.cwiseAbs().maxCoeff();
      h = (nf > 0.0) ? 0.01 * std::max(ny, 1e-3) / nf : (seg_end - seg_start);
    }
    const double span = seg_end - seg_start;
    while (t < seg_end) {
      if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
      bool last = false;
      const double h_proposed = h;
      if (t + h >= seg_end - 1e-12 * span) {
        h = seg_end - t;
        last = true;
      }
      const double h_floor = 1e-13 * std::max(1.0, std::abs(t)) + 1e-300;
      if (h < h_floor) throw NumericalError("step size underflow (stiff system)", t);
      if (traj.accepted_steps + traj.rejected_steps >= opt.max_steps)
        throw NumericalError("maximum number of integration steps exceeded", t);

      tmp = y + h * (a21 * k1);
      f(t + c2 * h, tmp, k2);
      tmp = y + h * (a31 * k1 + a32 * k2);
      f(t + c3 * h, tmp, k3);
      tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      f(t + c4 * h, tmp, k4);
      tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(t + c5 * h, tmp, k5);
      tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(t + h, tmp, k6);
      y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      f(t + h, y_new, k7);
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      const double en = error_norm(err, y, y_new, atol, rtol);
      if (!std::isfinite(en)) throw NumericalError("non-finite state during integration", t);
      if (en <= 1.0) {
        t = last ? seg_end : t + h;
        y = std::move(y_new);
        hermitize(y);
        k1 = k7;
        ++traj.accepted_steps;
        record_step(t, y);
        const double fac = en == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
        h = last ? std::max(h_proposed, h * fac) : h * fac;
      } else {
        ++traj.rejected_steps;
        h *= std::max(0.1, 0.9 * std::pow(en, -0.2));
      }
    }
    if (next_grid < grid.size() && seg_end == grid[next_grid]) {
      record_grid(seg_end, y);
      ++next_grid;
    }
  }
  return traj;
}

DensityMatrix wrap_rho(Matrix m) { return DensityMatrix::unchecked(std::move(m)); }
StateVector wrap_psi(Vector v) { return StateVector::unchecked(std::move(v)); }

}  // namespace

MasterTrajectory evolve_master(const DensityMatrix& rho0, const Hamiltonian& hamiltonian,
                               const std::vector<LindbladTerm>& terms,
                               const std::vector<double>& grid, const IntegratorOptions& options) {
  require_same_dim(rho0.dim(), hamiltonian.dim(), "evolve_master");
  MasterRhs rhs(hamiltonian, terms);
  return integrate<DensityMatrix, Matrix>(rho0.matrix(), rhs, grid, hamiltonian.breakpoints(),
                                          options, &wrap_rho);
}

NoJumpTrajectory evolve_no_jump(const StateVector& psi0, const Hamiltonian& hamiltonian,
                                const std::vector<LindbladTerm>& terms,
                                const std::vector<double>& grid, const IntegratorOptions& options) {
  require_same_dim(psi0.dim(), hamiltonian.dim(), "evolve_no_jump");
  NoJumpRhs rhs(hamiltonian, terms);
  return integrate<StateVector, Vector>(psi0.amplitudes(), rhs, grid, hamiltonian.breakpoints(),
                                        options, &wrap_psi);
}

JumpTransfer first_jump_transfer(const StateVector& psi0, const Hamiltonian& hamiltonian,
                                 const std::vector<LindbladTerm>& terms, std::size_t jump,
                                 Index target, const std::vector<double>& segments,
                                 std::size_t intervals, const std::vector<double>& output_times,
                                 const IntegratorOptions& options) {
  require_same_dim(psi0.dim(), hamiltonian.dim(), "first_jump_transfer");
  if (jump >= terms.size()) throw std::invalid_argument("first_jump_transfer: no such jump term");
  if (target < 0 || target >= psi0.dim())
    throw DimensionError("first_jump_transfer: target index out of range");
  if (segments.size() < 2) throw std::invalid_argument("first_jump_transfer: need two segment edges");
  std::size_t m = std::max<std::size_t>(2, intervals);
  if (m % 2) ++m;

  std::vector<double> quad = {segments.front()};
  for (std::size_t s = 1; s < segments.size(); ++s) {
    const auto piece = linear_grid(segments[s - 1], segments[s], m + 1);
    quad.insert(quad.end(), piece.begin() + 1, piece.end());
  }
  const double t_begin = segments.front(), t_end = segments.back();
  std::vector<double> grid = quad;
  for (double t : output_times)
    if (t >= t_begin && t <= t_end) grid.push_back(t);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  IntegratorOptions opt = options;
  opt.store_states = true;
  opt.record_steps = false;
  opt.observables.clear();
  const auto fwd = evolve_no_jump(psi0, hamiltonian, terms, grid, opt);

  std::vector<double> tau(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i) tau[i] = t_end - quad[quad.size() - 1 - i];
  tau.front() = 0.0;
  const auto back = evolve_no_jump(StateVector::basis_state(psi0.dim(), target),
                                   hamiltonian.time_reversed(t_end), terms, tau, opt);

  const SparseMatrix& l = terms[jump].sparse();
  std::vector<double> transfer(quad.size()), emission(quad.size());
  std::size_t gi = 0;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    while (fwd.times[gi] != quad[i]) ++gi;
    const Vector jumped = l * fwd.states[gi].amplitudes();
    const Vector& chi = back.states[quad.size() - 1 - i].amplitudes();
    transfer[i] = std::norm(chi.dot(jumped));
    emission[i] = jumped.squaredNorm();
  }
  auto simpson = [&](const std::vector<double>& f) {
    double total = 0.0;
    for (std::size_t s = 1; s < segments.size(); ++s) {
      const std::size_t first = (s - 1) * m;
      const double step = (segments[s] - segments[s - 1]) / static_cast<double>(m);
      double acc = f[first] + f[first + m];
      for (std::size_t k = 1; k < m; ++k) acc += (k % 2 ? 4.0 : 2.0) * f[first + k];
      total += acc * step / 3.0;
    }
    return total;
  };

  JumpTransfer out;
  out.transfer = simpson(transfer);
  out.jump_probability = simpson(emission);
  auto& traj = out.forward;
  traj.accepted_steps = fwd.accepted_steps + back.accepted_steps;
  traj.rejected_steps = fwd.rejected_steps + back.rejected_steps;
  traj.rhs_evaluations = fwd.rhs_evaluations + back.rhs_evaluations;
  std::vector<double> wanted;
  for (double t : output_times)
    if (t >= t_begin && t <= t_end) wanted.push_back(t);
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  std::size_t k = 0;
  for (std::size_t i = 0; i < fwd.times.size() && k < wanted.size(); ++i)
    if (fwd.times[i] == wanted[k]) {
      traj.times.push_back(fwd.times[i]);
      if (options.store_states) traj.states.push_back(fwd.states[i]);
      ++k;
    }
  return out;
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
  require_same_dim(rho.dim(), op.dim(), "expectation");
  return (rho.matrix().cwiseProduct(op.matrix().transpose())).sum();
}

Complex expectation(const StateVector& psi, const Operator& op) {
  require_same_dim(psi.dim(), op.dim(), "expectation");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

std::vector<double> linear_grid(double t0, double t1, std::size_t points) {
  if (points < 2) throw std::invalid_argument("grid needs at least two points");
  if (!(t1 > t0)) throw std::invalid_argument("grid end must exceed start");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = t1;
  return g;
}

}  // namespace diamond
