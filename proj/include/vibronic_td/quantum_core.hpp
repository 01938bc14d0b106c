#pragma once

// Composite qudit + bosonic-mode Hilbert spaces and the operators built on
// them. Tensor ordering is fixed: the qudit factor is the most significant
// index, followed by the modes in declared order, so that
//   index = ((q * n_0 + k_0) * n_1 + k_1) * ... .
// Units: hbar = 1 everywhere; Hamiltonians are angular frequencies.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

#include "vibronic_td/errors.hpp"

namespace vibronic_td {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

struct HilbertSpec {
  int qudit_dim = 1;
  std::vector<int> mode_truncations;
  /// When set, the last qudit level is the interferometric reference |ref>.
  bool has_reference = false;

  HilbertSpec() = default;
  HilbertSpec(int qudit_dim, std::vector<int> mode_truncations, bool has_reference = false);

  /// Throws DomainError on any broken invariant.
  void validate() const;

  int num_modes() const { return static_cast<int>(mode_truncations.size()); }
  Index mode_dim() const;
  Index dim() const { return qudit_dim * mode_dim(); }

  /// Same modes, trivial (one-level) qudit factor.
  HilbertSpec modes_only() const;
  /// Adds the reference level after the existing qudit levels.
  HilbertSpec with_reference() const;
  int reference_level() const;

  bool operator==(const HilbertSpec&) const = default;
};

class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(Matrix matrix, HilbertSpec spec, bool hermitian_hint = false);

  const Matrix& matrix() const { return matrix_; }
  const HilbertSpec& spec() const { return spec_; }
  bool hermitian_hint() const { return hermitian_hint_; }
  Index dim() const { return matrix_.rows(); }

  OperatorMatrix adjoint() const;
  bool is_hermitian(double tol = 1e-10) const;
  bool is_unitary(double tol = 1e-10) const;

  OperatorMatrix operator+(const OperatorMatrix& other) const;
  OperatorMatrix operator-(const OperatorMatrix& other) const;
  OperatorMatrix operator*(const OperatorMatrix& other) const;
  OperatorMatrix operator*(cplx scale) const;
  OperatorMatrix operator*(double scale) const { return *this * cplx(scale, 0.0); }

 private:
  void require_same_space(const OperatorMatrix& other) const;

  Matrix matrix_;
  HilbertSpec spec_;
  bool hermitian_hint_ = false;
};

inline OperatorMatrix operator*(double scale, const OperatorMatrix& op) { return op * scale; }
inline OperatorMatrix operator*(cplx scale, const OperatorMatrix& op) { return op * scale; }

class QuantumState {
 public:
  enum class Kind { PureVector, DensityMatrix };

  static QuantumState pure(const HilbertSpec& spec, Vector amplitudes, double tol = 1e-10);
  static QuantumState density(const HilbertSpec& spec, Matrix rho, double tol = 1e-10);

  Kind kind() const { return kind_; }
  bool is_pure() const { return kind_ == Kind::PureVector; }
  const HilbertSpec& spec() const { return spec_; }
  const Vector& vector() const;
  const Matrix& density_matrix() const;

  /// Density-matrix view (|psi><psi| for pure states).
  Matrix to_density() const;
  QuantumState as_density() const;

  cplx expectation(const OperatorMatrix& op) const;
  double trace() const;

 private:
  QuantumState(Kind kind, HilbertSpec spec, Vector psi, Matrix rho);

  Kind kind_ = Kind::PureVector;
  HilbertSpec spec_;
  Vector psi_;
  Matrix rho_;
};

// Single-factor building blocks (no embedding).
Matrix ladder_matrix(int n_max);
Matrix identity_matrix(Index n);

// Embedding of factor operators into the composite space.
OperatorMatrix identity(const HilbertSpec& spec);
OperatorMatrix embed_mode_operator(const HilbertSpec& spec, int mode_index, const Matrix& op,
                                   bool hermitian_hint = false);
OperatorMatrix embed_qudit_operator(const HilbertSpec& spec, const Matrix& op,
                                    bool hermitian_hint = false);
/// qudit_op (d x d) tensored with an operator on the full mode space.
OperatorMatrix qudit_tensor_modes(const HilbertSpec& spec, const Matrix& qudit_op,
                                  const Matrix& modes_op, bool hermitian_hint = false);

OperatorMatrix build_ladder(const HilbertSpec& spec, int mode_index);
OperatorMatrix number_operator(const HilbertSpec& spec, int mode_index);
/// Q = (a^+ + a)/sqrt2
OperatorMatrix position_operator(const HilbertSpec& spec, int mode_index);
/// P = i(a^+ - a)/sqrt2
OperatorMatrix momentum_operator(const HilbertSpec& spec, int mode_index);

/// |n><m| (x) 1_modes
OperatorMatrix qudit_projector(const HilbertSpec& spec, int n, int m);
/// |n><n| - |m><m|
OperatorMatrix pair_sigma_z(const HilbertSpec& spec, int n, int m);

/// D(beta) = exp(beta a^+ - beta* a) by exact exponentiation on the truncated
/// mode. Warns when |beta|^2 >= n_max/4, throws TruncationError when the
/// coherent-state tail beyond n_max exceeds 1e-6.
OperatorMatrix displacement_operator(const HilbertSpec& spec, int mode_index, cplx beta);

/// Qudit level 0, thermal occupation nbar on `mode_index`, vacuum elsewhere.
QuantumState thermal_state(const HilbertSpec& spec, int mode_index, double nbar);

/// Product basis state |level> (x) |k_0, k_1, ...>.
QuantumState basis_state(const HilbertSpec& spec, int level, const std::vector<int>& fock);
Index basis_index(const HilbertSpec& spec, int level, const std::vector<int>& fock);

// Two-level gates acting on the qudit pair (n, m); identity on other levels.
// Within the pair, n plays the role of |0> and m of |1>.
Matrix pair_gate_matrix(int qudit_dim, int n, int m, const Eigen::Matrix2cd& u);
OperatorMatrix hadamard(const HilbertSpec& spec, int n = 0, int m = 1);
/// R_x(theta) = exp(-i theta sigma_x / 2)
OperatorMatrix rotation_x(const HilbertSpec& spec, double theta, int n = 0, int m = 1);
/// R_y(theta) = exp(-i theta sigma_y / 2)
OperatorMatrix rotation_y(const HilbertSpec& spec, double theta, int n = 0, int m = 1);

Eigen::Matrix2cd pauli_x();
Eigen::Matrix2cd pauli_y();
Eigen::Matrix2cd pauli_z();

Matrix commutator(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& m);
/// Smallest n_max with Poisson(mean) tail P(k >= n_max) below `tail`.
int poisson_cutoff(double mean, double tail);

}  // namespace vibronic_td
