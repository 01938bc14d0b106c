#include "vibronic_td/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace vibronic_td {

namespace {

void require_hermitian(const OperatorMatrix& H) {
  const double scale = std::max(1.0, max_abs(H.matrix()));
  if (!H.is_hermitian(1e-10 * scale)) throw DomainError("Hamiltonian is not Hermitian");
}

double spectral_norm_bound(const Matrix& m) {
  // max row sum bounds the spectral norm of a Hermitian matrix
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

// out += scale * A * S with S column-major: one contiguous axpy per nonzero.
void accumulate_dense_sparse(const Matrix& A, const SparseMatrix& S, cplx scale, Matrix& out) {
  for (Index j = 0; j < S.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(S, j); it; ++it) out.col(j) += (scale * it.value()) * A.col(it.row());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// NoiseSpec / PropagationPlan

NoiseSpec NoiseSpec::fitted() {
  NoiseSpec n;
  n.gamma_h = 43.0;
  n.tau_d = 110e-3;
  n.d_delta = 2.0 * std::numbers::pi * 52.0 / 1e-3;
  n.nbar = 0.061;
  n.readout_error = 0.012;
  return n;
}

void NoiseSpec::validate() const {
  if (!(gamma_h >= 0.0) || !std::isfinite(gamma_h)) throw DomainError("gamma_h must be >= 0");
  if (!(tau_d > 0.0)) throw DomainError("tau_d must be > 0 (or infinite)");
  if (!std::isfinite(d_delta)) throw DomainError("d_delta must be finite");
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw DomainError("nbar must be >= 0");
  if (!(readout_error >= 0.0 && readout_error < 0.5)) {
    throw DomainError("readout_error must be in [0, 0.5)");
  }
}

bool NoiseSpec::is_noiseless() const {
  return gamma_h == 0.0 && std::isinf(tau_d) && d_delta == 0.0;
}

double NoiseSpec::dephasing_rate() const { return std::isinf(tau_d) ? 0.0 : 2.0 / tau_d; }

std::vector<double> PropagationPlan::uniform_grid(double t_max, int points) {
  if (points < 2) throw DomainError("time grid needs at least 2 points");
  if (!(t_max > 0.0)) throw DomainError("time grid span must be > 0");
  std::vector<double> t(points);
  for (int k = 0; k < points; ++k) t[k] = t_max * k / (points - 1);
  return t;
}

void PropagationPlan::validate() const {
  if (t_grid.empty()) throw DomainError("time grid is empty");
  if (t_grid.front() != 0.0) throw DomainError("time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) throw DomainError("time grid must be strictly increasing");
  }
  if (slices_per_step < 1) throw DomainError("slices_per_step must be >= 1");
  if (direction_sign != 1 && direction_sign != -1) throw DomainError("direction_sign must be +1 or -1");
}

// ---------------------------------------------------------------------------
// Unitary propagation

UnitaryPropagator::UnitaryPropagator(const OperatorMatrix& H) : spec_(H.spec()) {
  require_hermitian(H);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H.matrix() + H.matrix().adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
}

Matrix UnitaryPropagator::unitary(double t, int sign) const {
  Vector ph(eigenvalues_.size());
  for (Index k = 0; k < ph.size(); ++k) ph(k) = std::exp(-kI * (sign * eigenvalues_(k) * t));
  return eigenvectors_ * ph.asDiagonal() * eigenvectors_.adjoint();
}

Vector UnitaryPropagator::apply(const Vector& psi, double t, int sign) const {
  Vector c = eigenvectors_.adjoint() * psi;
  for (Index k = 0; k < c.size(); ++k) c(k) *= std::exp(-kI * (sign * eigenvalues_(k) * t));
  return eigenvectors_ * c;
}

Matrix UnitaryPropagator::apply_density(const Matrix& rho, double t, int sign) const {
  Matrix u = unitary(t, sign);
  return u * rho * u.adjoint();
}

QuantumState UnitaryPropagator::evolve(const QuantumState& state, double t, int sign) const {
  if (!(state.spec() == spec_)) throw DomainError("state and Hamiltonian act on different spaces");
  if (state.is_pure()) return QuantumState::pure(spec_, apply(state.vector(), t, sign), 1e-8);
  return QuantumState::density(spec_, apply_density(state.density_matrix(), t, sign), 1e-8);
}

QuantumState evolve_unitary(const OperatorMatrix& H, const QuantumState& state, double t, int sign) {
  if (sign != 1 && sign != -1) throw DomainError("sign must be +1 or -1");
  return UnitaryPropagator(H).evolve(state, t, sign);
}

// ---------------------------------------------------------------------------
// Lindblad

SparseMatrix to_sparse(const Matrix& m, double drop) {
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) {
      if (std::abs(m(r, c)) > drop) trips.emplace_back(r, c, m(r, c));
    }
  }
  SparseMatrix s(m.rows(), m.cols());
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

LindbladModel LindbladModel::from_noise(const OperatorMatrix& H, const NoiseSpec& noise, int mode_index) {
  noise.validate();
  require_hermitian(H);
  LindbladModel m;
  m.H = H;
  const HilbertSpec& spec = H.spec();
  OperatorMatrix a = build_ladder(spec, mode_index);
  OperatorMatrix n = number_operator(spec, mode_index);
  m.drift_operator = to_sparse(n.matrix());
  m.drift_coefficient = noise.d_delta;
  if (noise.gamma_h > 0.0) {
    m.jump_operators.push_back(to_sparse(a.matrix().adjoint()));
    m.rates.push_back(noise.gamma_h);
  }
  if (noise.dephasing_rate() > 0.0) {
    m.jump_operators.push_back(to_sparse(n.matrix()));
    m.rates.push_back(noise.dephasing_rate());
  }
  return m;
}

double lindblad_step(const LindbladModel& model, const std::vector<double>& t_grid,
                     const LindbladOptions& opts) {
  if (t_grid.size() < 2) throw DomainError("Lindblad grid needs at least 2 points");
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < t_grid.size(); ++k) spacing = std::min(spacing, t_grid[k] - t_grid[k - 1]);
  double omega = spectral_norm_bound(model.H.matrix());
  if (model.drift_coefficient != 0.0 && model.drift_operator.nonZeros() > 0) {
    omega += std::abs(model.drift_coefficient) * t_grid.back() *
             spectral_norm_bound(Matrix(model.drift_operator));
  }
  for (std::size_t k = 0; k < model.jump_operators.size(); ++k) {
    Matrix l(model.jump_operators[k]);
    omega += model.rates[k] * spectral_norm_bound(l.adjoint() * l);
  }
  double step = spacing;
  if (omega > 0.0) step = std::min(step, 1.0 / (50.0 * omega));
  if (opts.max_step > 0.0) step = std::min(step, opts.max_step);
  return step;
}

void integrate_lindblad(const LindbladModel& model, const Matrix& rho0,
                        const std::vector<double>& t_grid,
                        const std::function<void(std::size_t, const Matrix&)>& observe,
                        const LindbladOptions& opts) {
  const Index D = model.H.dim();
  if (rho0.rows() != D || rho0.cols() != D) throw DomainError("density matrix has wrong dimension");
  if (model.jump_operators.size() != model.rates.size()) {
    throw DomainError("one rate per jump operator required");
  }
  PropagationPlan check;
  check.t_grid = t_grid;
  check.validate();
  const double h_max = lindblad_step(model, t_grid, opts);

  SparseMatrix H = to_sparse(model.H.matrix());
  // K = H - (i/2) sum rate L^+ L, so that the generator reads
  // -i(K rho - rho K^+) + sum rate L rho L^+.
  SparseMatrix anti(D, D);
  std::vector<SparseMatrix> jumps_adj;
  for (std::size_t k = 0; k < model.jump_operators.size(); ++k) {
    const SparseMatrix& L = model.jump_operators[k];
    SparseMatrix ladj = L.adjoint();
    anti += model.rates[k] * SparseMatrix(ladj * L);
    jumps_adj.push_back(ladj);
  }
  const SparseMatrix K0 = H - (0.5 * kI) * anti;
  const bool has_drift = model.drift_coefficient != 0.0;

  const SparseMatrix K0_adj = K0.adjoint();
  const SparseMatrix drift_adj = model.drift_operator.adjoint();
  std::vector<SparseMatrix> jumps_adj_c;
  for (const auto& L : model.jump_operators) jumps_adj_c.push_back(L.adjoint());

  Matrix x(D, D), y(D, D), z(D, D);
  // rho is Hermitian, so K rho = (rho K^+)^+ and L rho L^+ = (rho L^+)^+ L^+.
  auto rhs = [&](double td, const Matrix& rho, Matrix& out) {
    x.setZero();
    accumulate_dense_sparse(rho, K0_adj, 1.0, x);
    if (has_drift) accumulate_dense_sparse(rho, drift_adj, model.drift_coefficient * td, x);
    // -i(K rho - rho K^+) = -i(x^+ - x)
    out.noalias() = kI * x;
    out.noalias() -= kI * x.adjoint();
    for (std::size_t k = 0; k < model.jump_operators.size(); ++k) {
      y.setZero();
      accumulate_dense_sparse(rho, jumps_adj_c[k], 1.0, y);
      z = y.adjoint();
      accumulate_dense_sparse(z, jumps_adj_c[k], model.rates[k], out);
    }
  };

  Matrix rho = 0.5 * (rho0 + rho0.adjoint());
  const double tr0 = rho.trace().real();
  Matrix k1(D, D), k2(D, D), k3(D, D), k4(D, D), stage(D, D);
  double t = 0.0;
  observe(0, rho);
  for (std::size_t g = 1; g < t_grid.size(); ++g) {
    const double span = t_grid[g] - t;
    const int steps = std::max(1, static_cast<int>(std::ceil(span / h_max - 1e-9)));
    const double h = span / steps;
    for (int s = 0; s < steps; ++s) {
      const double tm = t + 0.5 * h;
      rhs(tm, rho, k1);
      stage.noalias() = rho + (0.5 * h) * k1;
      rhs(tm, stage, k2);
      stage.noalias() = rho + (0.5 * h) * k2;
      rhs(tm, stage, k3);
      stage.noalias() = rho + h * k3;
      rhs(tm, stage, k4);
      rho.noalias() += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      stage.noalias() = rho.adjoint();
      rho += stage;
      rho *= 0.5;
      t += h;
    }
    t = t_grid[g];
    const double drift = std::abs(rho.trace().real() - tr0);
    if (!(drift <= opts.trace_tolerance)) {
      std::ostringstream os;
      os << "Lindblad integration unstable at t=" << t << " (trace drift " << drift
         << "); use a smaller step than " << h_max;
      throw NumericalError(os.str());
    }
    observe(g, rho);
  }
}

std::vector<Matrix> integrate_lindblad(const LindbladModel& model, const Matrix& rho0,
                                       const std::vector<double>& t_grid,
                                       const LindbladOptions& opts) {
  std::vector<Matrix> out(t_grid.size());
  integrate_lindblad(
      model, rho0, t_grid, [&](std::size_t k, const Matrix& rho) { out[k] = rho; }, opts);
  return out;
}

std::vector<QuantumState> evolve_lindblad(const OperatorMatrix& H, const QuantumState& rho,
                                          const NoiseSpec& noise, const std::vector<double>& t_grid,
                                          int mode_index, const LindbladOptions& opts) {
  if (rho.is_pure()) throw DomainError("Lindblad evolution needs a density matrix");
  if (!(rho.spec() == H.spec())) throw DomainError("state and Hamiltonian act on different spaces");
  LindbladModel model = LindbladModel::from_noise(H, noise, mode_index);
  std::vector<QuantumState> out;
  out.reserve(t_grid.size());
  integrate_lindblad(
      model, rho.density_matrix(), t_grid,
      [&](std::size_t, const Matrix& r) { out.push_back(QuantumState::density(H.spec(), r, 1e-7)); },
      opts);
  return out;
}

// ---------------------------------------------------------------------------
// Trotter / Schrodinger RK4

QuantumState trotter_step(const std::vector<OperatorMatrix>& terms, const QuantumState& state,
                          double dt, int slices) {
  if (terms.empty()) throw DomainError("Trotter step needs at least one term");
  if (slices < 1) throw DomainError("slices must be >= 1");
  const double tau = dt / slices;
  Matrix slice = identity_matrix(terms.front().dim());
  for (const auto& term : terms) {
    if (!(term.spec() == state.spec())) throw DomainError("Trotter term acts on a different space");
    // Applied in order: H_1 first.
    slice = UnitaryPropagator(term).unitary(tau) * slice;
  }
  Matrix u = identity_matrix(slice.rows());
  for (int s = 0; s < slices; ++s) u = slice * u;
  if (state.is_pure()) return QuantumState::pure(state.spec(), u * state.vector(), 1e-8);
  return QuantumState::density(state.spec(), u * state.density_matrix() * u.adjoint(), 1e-8);
}

Vector integrate_schrodinger(const std::function<Matrix(double)>& H_of_t, const Vector& psi0,
                             double t0, double t1, double step) {
  if (!(step > 0.0)) throw DomainError("RK4 step must be > 0");
  const double span = t1 - t0;
  if (span < 0.0) throw DomainError("RK4 end time precedes start time");
  Vector psi = psi0;
  if (span == 0.0) return psi;
  const int steps = std::max(1, static_cast<int>(std::ceil(span / step - 1e-9)));
  const double h = span / steps;
  double t = t0;
  for (int s = 0; s < steps; ++s) {
    const Matrix Ha = H_of_t(t);
    const Matrix Hm = H_of_t(t + 0.5 * h);
    const Matrix Hb = H_of_t(t + h);
    Vector k1 = -kI * (Ha * psi);
    Vector k2 = -kI * (Hm * (psi + 0.5 * h * k1));
    Vector k3 = -kI * (Hm * (psi + 0.5 * h * k2));
    Vector k4 = -kI * (Hb * (psi + h * k3));
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return psi;
}

}  // namespace vibronic_td
