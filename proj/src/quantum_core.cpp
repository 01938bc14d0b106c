#include "vibronic_td/quantum_core.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>

namespace vibronic_td {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}

// Operator on the full mode space with `op` on factor `mode_index`.
Matrix mode_space_operator(const HilbertSpec& spec, int mode_index, const Matrix& op) {
  Index before = 1;
  Index after = 1;
  for (int j = 0; j < spec.num_modes(); ++j) {
    if (j < mode_index) before *= spec.mode_truncations[j];
    if (j > mode_index) after *= spec.mode_truncations[j];
  }
  Matrix left = Eigen::kroneckerProduct(identity_matrix(before), op).eval();
  return Eigen::kroneckerProduct(left, identity_matrix(after)).eval();
}

void check_mode(const HilbertSpec& spec, int mode_index) {
  if (mode_index < 0 || mode_index >= spec.num_modes()) {
    std::ostringstream os;
    os << "mode index " << mode_index << " out of range [0, " << spec.num_modes() << ")";
    throw DomainError(os.str());
  }
}

void check_level(const HilbertSpec& spec, int level) {
  if (level < 0 || level >= spec.qudit_dim) {
    std::ostringstream os;
    os << "qudit level " << level << " out of range [0, " << spec.qudit_dim << ")";
    throw DomainError(os.str());
  }
}

double poisson_tail(double mean, int n) {
  // P(k >= n) = 1 - sum_{k<n} e^{-mean} mean^k / k!
  if (mean <= 0.0) return n <= 0 ? 1.0 : 0.0;
  double term = std::exp(-mean);
  double head = 0.0;
  for (int k = 0; k < n; ++k) {
    head += term;
    term *= mean / (k + 1);
  }
  // Sum the tail directly when the head is close to 1.
  double tail = 0.0;
  double t = term;
  for (int k = n; k < n + 2000 && t > 1e-300; ++k) {
    tail += t;
    t *= mean / (k + 1);
  }
  return std::min(tail, std::max(0.0, 1.0 - head));
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  WarningHandler old = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return old;
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

// ---------------------------------------------------------------------------
// HilbertSpec

HilbertSpec::HilbertSpec(int d, std::vector<int> modes, bool ref)
    : qudit_dim(d), mode_truncations(std::move(modes)), has_reference(ref) {
  validate();
}

void HilbertSpec::validate() const {
  if (qudit_dim < 1) throw DomainError("qudit_dim must be >= 1");
  for (int n : mode_truncations) {
    if (n < 1) throw DomainError("mode truncation must be >= 1");
  }
  if (has_reference && qudit_dim < 2) {
    throw DomainError("a reference level needs qudit_dim >= 2");
  }
}

Index HilbertSpec::mode_dim() const {
  return std::accumulate(mode_truncations.begin(), mode_truncations.end(), Index{1},
                         [](Index acc, int n) { return acc * n; });
}

HilbertSpec HilbertSpec::modes_only() const { return HilbertSpec(1, mode_truncations, false); }

HilbertSpec HilbertSpec::with_reference() const {
  if (has_reference) throw DomainError("space already has a reference level");
  return HilbertSpec(qudit_dim + 1, mode_truncations, true);
}

int HilbertSpec::reference_level() const {
  if (!has_reference) throw DomainError("space has no reference level");
  return qudit_dim - 1;
}

// ---------------------------------------------------------------------------
// OperatorMatrix

OperatorMatrix::OperatorMatrix(Matrix matrix, HilbertSpec spec, bool hermitian_hint)
    : matrix_(std::move(matrix)), spec_(std::move(spec)), hermitian_hint_(hermitian_hint) {
  spec_.validate();
  if (matrix_.rows() != spec_.dim() || matrix_.cols() != spec_.dim()) {
    std::ostringstream os;
    os << "operator is " << matrix_.rows() << "x" << matrix_.cols() << " but space dimension is "
       << spec_.dim();
    throw DomainError(os.str());
  }
  if (hermitian_hint_ && !is_hermitian(1e-10 * std::max(1.0, max_abs(matrix_)))) {
    throw DomainError("operator flagged Hermitian is not Hermitian");
  }
}

OperatorMatrix OperatorMatrix::adjoint() const {
  return OperatorMatrix(matrix_.adjoint(), spec_, hermitian_hint_);
}

bool OperatorMatrix::is_hermitian(double tol) const {
  return max_abs(matrix_ - matrix_.adjoint()) < tol;
}

bool OperatorMatrix::is_unitary(double tol) const {
  return max_abs(matrix_.adjoint() * matrix_ - Matrix::Identity(dim(), dim())) < tol;
}

void OperatorMatrix::require_same_space(const OperatorMatrix& other) const {
  if (!(spec_ == other.spec_)) throw DomainError("operators act on different spaces");
}

OperatorMatrix OperatorMatrix::operator+(const OperatorMatrix& other) const {
  require_same_space(other);
  return OperatorMatrix(matrix_ + other.matrix_, spec_, hermitian_hint_ && other.hermitian_hint_);
}

OperatorMatrix OperatorMatrix::operator-(const OperatorMatrix& other) const {
  require_same_space(other);
  return OperatorMatrix(matrix_ - other.matrix_, spec_, hermitian_hint_ && other.hermitian_hint_);
}

OperatorMatrix OperatorMatrix::operator*(const OperatorMatrix& other) const {
  require_same_space(other);
  return OperatorMatrix(matrix_ * other.matrix_, spec_, false);
}

OperatorMatrix OperatorMatrix::operator*(cplx scale) const {
  return OperatorMatrix(matrix_ * scale, spec_, hermitian_hint_ && scale.imag() == 0.0);
}

// ---------------------------------------------------------------------------
// QuantumState

QuantumState::QuantumState(Kind kind, HilbertSpec spec, Vector psi, Matrix rho)
    : kind_(kind), spec_(std::move(spec)), psi_(std::move(psi)), rho_(std::move(rho)) {}

QuantumState QuantumState::pure(const HilbertSpec& spec, Vector amplitudes, double tol) {
  spec.validate();
  if (amplitudes.size() != spec.dim()) throw DomainError("state vector has wrong dimension");
  if (std::abs(amplitudes.norm() - 1.0) > tol) {
    std::ostringstream os;
    os << "pure state not normalized (norm " << amplitudes.norm() << ")";
    throw DomainError(os.str());
  }
  return QuantumState(Kind::PureVector, spec, std::move(amplitudes), Matrix());
}

QuantumState QuantumState::density(const HilbertSpec& spec, Matrix rho, double tol) {
  spec.validate();
  if (rho.rows() != spec.dim() || rho.cols() != spec.dim()) {
    throw DomainError("density matrix has wrong dimension");
  }
  if (max_abs(rho - rho.adjoint()) > tol) throw DomainError("density matrix is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > tol) {
    std::ostringstream os;
    os << "density matrix trace " << rho.trace().real() << " != 1";
    throw DomainError(os.str());
  }
  Matrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw DomainError("density matrix has a negative eigenvalue");
  }
  return QuantumState(Kind::DensityMatrix, spec, Vector(), std::move(rho));
}

const Vector& QuantumState::vector() const {
  if (kind_ != Kind::PureVector) throw DomainError("state is a density matrix");
  return psi_;
}

const Matrix& QuantumState::density_matrix() const {
  if (kind_ != Kind::DensityMatrix) throw DomainError("state is a pure vector");
  return rho_;
}

Matrix QuantumState::to_density() const {
  if (kind_ == Kind::DensityMatrix) return rho_;
  return psi_ * psi_.adjoint();
}

QuantumState QuantumState::as_density() const {
  if (kind_ == Kind::DensityMatrix) return *this;
  return QuantumState(Kind::DensityMatrix, spec_, Vector(), to_density());
}

cplx QuantumState::expectation(const OperatorMatrix& op) const {
  if (!(op.spec() == spec_)) throw DomainError("operator and state act on different spaces");
  if (kind_ == Kind::PureVector) return psi_.dot(op.matrix() * psi_);
  return (op.matrix() * rho_).trace();
}

double QuantumState::trace() const {
  if (kind_ == Kind::PureVector) return psi_.squaredNorm();
  return rho_.trace().real();
}

// ---------------------------------------------------------------------------
// Operators

Matrix ladder_matrix(int n_max) {
  Matrix a = Matrix::Zero(n_max, n_max);
  for (int k = 1; k < n_max; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

Matrix identity_matrix(Index n) { return Matrix::Identity(n, n); }

OperatorMatrix identity(const HilbertSpec& spec) {
  return OperatorMatrix(identity_matrix(spec.dim()), spec, true);
}

OperatorMatrix embed_mode_operator(const HilbertSpec& spec, int mode_index, const Matrix& op,
                                   bool hermitian_hint) {
  check_mode(spec, mode_index);
  const int n = spec.mode_truncations[mode_index];
  if (op.rows() != n || op.cols() != n) throw DomainError("mode operator has wrong dimension");
  Matrix modes = mode_space_operator(spec, mode_index, op);
  return OperatorMatrix(Eigen::kroneckerProduct(identity_matrix(spec.qudit_dim), modes).eval(),
                        spec, hermitian_hint);
}

OperatorMatrix embed_qudit_operator(const HilbertSpec& spec, const Matrix& op, bool hermitian_hint) {
  return qudit_tensor_modes(spec, op, identity_matrix(spec.mode_dim()), hermitian_hint);
}

OperatorMatrix qudit_tensor_modes(const HilbertSpec& spec, const Matrix& qudit_op,
                                  const Matrix& modes_op, bool hermitian_hint) {
  if (qudit_op.rows() != spec.qudit_dim || qudit_op.cols() != spec.qudit_dim) {
    throw DomainError("qudit operator has wrong dimension");
  }
  if (modes_op.rows() != spec.mode_dim() || modes_op.cols() != spec.mode_dim()) {
    throw DomainError("mode-space operator has wrong dimension");
  }
  return OperatorMatrix(Eigen::kroneckerProduct(qudit_op, modes_op).eval(), spec, hermitian_hint);
}

OperatorMatrix build_ladder(const HilbertSpec& spec, int mode_index) {
  check_mode(spec, mode_index);
  return embed_mode_operator(spec, mode_index, ladder_matrix(spec.mode_truncations[mode_index]));
}

OperatorMatrix number_operator(const HilbertSpec& spec, int mode_index) {
  check_mode(spec, mode_index);
  Matrix a = ladder_matrix(spec.mode_truncations[mode_index]);
  return embed_mode_operator(spec, mode_index, a.adjoint() * a, true);
}

OperatorMatrix position_operator(const HilbertSpec& spec, int mode_index) {
  check_mode(spec, mode_index);
  Matrix a = ladder_matrix(spec.mode_truncations[mode_index]);
  return embed_mode_operator(spec, mode_index, (a.adjoint() + a) / std::sqrt(2.0), true);
}

OperatorMatrix momentum_operator(const HilbertSpec& spec, int mode_index) {
  check_mode(spec, mode_index);
  Matrix a = ladder_matrix(spec.mode_truncations[mode_index]);
  return embed_mode_operator(spec, mode_index, kI * (a.adjoint() - a) / std::sqrt(2.0), true);
}

OperatorMatrix qudit_projector(const HilbertSpec& spec, int n, int m) {
  check_level(spec, n);
  check_level(spec, m);
  Matrix q = Matrix::Zero(spec.qudit_dim, spec.qudit_dim);
  q(n, m) = 1.0;
  return embed_qudit_operator(spec, q, n == m);
}

OperatorMatrix pair_sigma_z(const HilbertSpec& spec, int n, int m) {
  return qudit_projector(spec, n, n) - qudit_projector(spec, m, m);
}

OperatorMatrix displacement_operator(const HilbertSpec& spec, int mode_index, cplx beta) {
  check_mode(spec, mode_index);
  const int n_max = spec.mode_truncations[mode_index];
  const double mean = std::norm(beta);
  if (mean > 0.0 && poisson_tail(mean, n_max) > 1e-6) {
    const int suggested = poisson_cutoff(mean, 1e-10);
    std::ostringstream os;
    os << "Fock truncation n_max=" << n_max << " too small for displacement |beta|^2=" << mean
       << "; use n_max >= " << suggested;
    throw TruncationError(os.str(), suggested);
  }
  if (mean >= n_max / 4.0) {
    std::ostringstream os;
    os << "displacement |beta|^2=" << mean << " is not << n_max=" << n_max;
    warn(os.str());
  }
  Matrix a = ladder_matrix(n_max);
  // beta a^+ - beta* a is anti-Hermitian; i times it is Hermitian.
  Matrix herm = kI * (beta * a.adjoint() - std::conj(beta) * a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  const Eigen::VectorXd& lam = es.eigenvalues();
  Vector phases(lam.size());
  for (Index k = 0; k < lam.size(); ++k) phases(k) = std::exp(-kI * lam(k));
  Matrix d = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  return embed_mode_operator(spec, mode_index, d);
}

QuantumState thermal_state(const HilbertSpec& spec, int mode_index, double nbar) {
  check_mode(spec, mode_index);
  if (!(nbar >= 0.0)) throw DomainError("thermal occupation must be >= 0");
  const int n_max = spec.mode_truncations[mode_index];
  const double ratio = nbar / (nbar + 1.0);
  const double tail = std::pow(ratio, n_max);
  if (tail >= 1e-8) {
    const int suggested =
        static_cast<int>(std::ceil(std::log(1e-10) / std::log(std::max(ratio, 1e-300))));
    std::ostringstream os;
    os << "thermal occupation nbar=" << nbar << " leaves Boltzmann tail " << tail
       << " beyond n_max=" << n_max << "; use n_max >= " << suggested;
    throw TruncationError(os.str(), suggested);
  }
  Matrix p = Matrix::Zero(n_max, n_max);
  double norm = 0.0;
  for (int k = 0; k < n_max; ++k) {
    const double pk = std::pow(ratio, k) / (nbar + 1.0);
    p(k, k) = pk;
    norm += pk;
  }
  p /= norm;

  Matrix vac = Matrix::Zero(1, 1);
  vac(0, 0) = 1.0;
  Matrix modes = Matrix::Ones(1, 1);
  for (int j = 0; j < spec.num_modes(); ++j) {
    const int n = spec.mode_truncations[j];
    Matrix factor = Matrix::Zero(n, n);
    if (j == mode_index) {
      factor = p;
    } else {
      factor(0, 0) = 1.0;
    }
    modes = Eigen::kroneckerProduct(modes, factor).eval();
  }
  Matrix q = Matrix::Zero(spec.qudit_dim, spec.qudit_dim);
  q(0, 0) = 1.0;
  return QuantumState::density(spec, Eigen::kroneckerProduct(q, modes).eval());
}

Index basis_index(const HilbertSpec& spec, int level, const std::vector<int>& fock) {
  check_level(spec, level);
  if (static_cast<int>(fock.size()) != spec.num_modes()) {
    throw DomainError("Fock occupation list has wrong length");
  }
  Index idx = level;
  for (int j = 0; j < spec.num_modes(); ++j) {
    if (fock[j] < 0 || fock[j] >= spec.mode_truncations[j]) {
      throw DomainError("Fock occupation outside truncation");
    }
    idx = idx * spec.mode_truncations[j] + fock[j];
  }
  return idx;
}

QuantumState basis_state(const HilbertSpec& spec, int level, const std::vector<int>& fock) {
  Vector v = Vector::Zero(spec.dim());
  v(basis_index(spec, level, fock)) = 1.0;
  return QuantumState::pure(spec, std::move(v));
}

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

Eigen::Matrix2cd pauli_y() {
  Eigen::Matrix2cd m;
  m << 0, -kI, kI, 0;
  return m;
}

Eigen::Matrix2cd pauli_z() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}

Matrix pair_gate_matrix(int qudit_dim, int n, int m, const Eigen::Matrix2cd& u) {
  if (n < 0 || m < 0 || n >= qudit_dim || m >= qudit_dim || n == m) {
    throw DomainError("invalid qudit level pair for two-level gate");
  }
  Matrix g = identity_matrix(qudit_dim);
  g(n, n) = u(0, 0);
  g(n, m) = u(0, 1);
  g(m, n) = u(1, 0);
  g(m, m) = u(1, 1);
  return g;
}

OperatorMatrix hadamard(const HilbertSpec& spec, int n, int m) {
  Eigen::Matrix2cd h;
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  return embed_qudit_operator(spec, pair_gate_matrix(spec.qudit_dim, n, m, h), true);
}

OperatorMatrix rotation_x(const HilbertSpec& spec, double theta, int n, int m) {
  Eigen::Matrix2cd r = std::cos(theta / 2) * Eigen::Matrix2cd::Identity() -
                       kI * std::sin(theta / 2) * pauli_x();
  return embed_qudit_operator(spec, pair_gate_matrix(spec.qudit_dim, n, m, r));
}

OperatorMatrix rotation_y(const HilbertSpec& spec, double theta, int n, int m) {
  Eigen::Matrix2cd r = std::cos(theta / 2) * Eigen::Matrix2cd::Identity() -
                       kI * std::sin(theta / 2) * pauli_y();
  return embed_qudit_operator(spec, pair_gate_matrix(spec.qudit_dim, n, m, r));
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

int poisson_cutoff(double mean, double tail) {
  int n = 1;
  while (poisson_tail(mean, n) > tail) ++n;
  return n;
}

}  // namespace vibronic_td
