#pragma once

// Exact unitary propagation, Lindblad integration for the motional noise
// model, and first-order Trotter stepping.

#include <Eigen/Sparse>

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "vibronic_td/quantum_core.hpp"

namespace vibronic_td {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

struct NoiseSpec {
  double gamma_h = 0.0;
  /// Pure dephasing lifetime; infinity disables dephasing.
  double tau_d = std::numeric_limits<double>::infinity();
  /// Linear frequency drift (rad/s per s).
  double d_delta = 0.0;
  double nbar = 0.0;
  double readout_error = 0.0;

  /// gamma_h = 43/s, tau_d = 110 ms, d_delta = 2pi x 52 Hz/ms, nbar = 0.061, readout 1.2%.
  static NoiseSpec fitted();
  static NoiseSpec none() { return {}; }
  void validate() const;
  bool is_noiseless() const;
  double dephasing_rate() const;
};

enum class PropagationMethod { Exact, Lindblad, Trotter };

struct PropagationPlan {
  std::vector<double> t_grid;
  PropagationMethod method = PropagationMethod::Exact;
  int slices_per_step = 1;
  int direction_sign = 1;

  static std::vector<double> uniform_grid(double t_max, int points);
  void validate() const;
};

/// Spectral decomposition of a Hermitian H, reused for any t.
class UnitaryPropagator {
 public:
  explicit UnitaryPropagator(const OperatorMatrix& H);

  /// exp(-i sign H t)
  Matrix unitary(double t, int sign = 1) const;
  Vector apply(const Vector& psi, double t, int sign = 1) const;
  Matrix apply_density(const Matrix& rho, double t, int sign = 1) const;
  QuantumState evolve(const QuantumState& state, double t, int sign = 1) const;

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }
  const HilbertSpec& spec() const { return spec_; }

 private:
  HilbertSpec spec_;
  Eigen::VectorXd eigenvalues_;
  Matrix eigenvectors_;
};

QuantumState evolve_unitary(const OperatorMatrix& H, const QuantumState& state, double t, int sign = 1);

/// drho/dt = -i[H(t), rho] + sum_k rate_k D[L_k] rho.
/// H(t) = H_static + drift_coefficient * t * drift_operator.
struct LindbladModel {
  OperatorMatrix H;
  SparseMatrix drift_operator;
  double drift_coefficient = 0.0;
  std::vector<SparseMatrix> jump_operators;
  std::vector<double> rates;

  /// Heating gamma_h D[a^+], dephasing (2/tau_d) D[n], drift d_delta n t on mode 0.
  static LindbladModel from_noise(const OperatorMatrix& H, const NoiseSpec& noise, int mode_index = 0);
};

struct LindbladOptions {
  /// 0 selects min(grid spacing, 1/(50 omega_max)).
  double max_step = 0.0;
  double trace_tolerance = 1e-6;
};

/// Density matrices at every grid time, integrated with fixed-step RK4.
std::vector<Matrix> integrate_lindblad(const LindbladModel& model, const Matrix& rho0,
                                       const std::vector<double>& t_grid,
                                       const LindbladOptions& opts = {});

/// Same integration, handing each grid-point state to `observe` instead of storing it.
void integrate_lindblad(const LindbladModel& model, const Matrix& rho0,
                        const std::vector<double>& t_grid,
                        const std::function<void(std::size_t, const Matrix&)>& observe,
                        const LindbladOptions& opts = {});

/// Step actually used for a model and grid.
double lindblad_step(const LindbladModel& model, const std::vector<double>& t_grid,
                     const LindbladOptions& opts = {});

std::vector<QuantumState> evolve_lindblad(const OperatorMatrix& H, const QuantumState& rho,
                                          const NoiseSpec& noise, const std::vector<double>& t_grid,
                                          int mode_index = 0, const LindbladOptions& opts = {});

/// (prod_k exp(-i H_k dt/slices))^slices
QuantumState trotter_step(const std::vector<OperatorMatrix>& terms, const QuantumState& state,
                          double dt, int slices);

/// Fixed-step RK4 for i d psi/dt = H(t) psi; `step` bounds the step size.
Vector integrate_schrodinger(const std::function<Matrix(double)>& H_of_t, const Vector& psi0,
                             double t0, double t1, double step);

SparseMatrix to_sparse(const Matrix& m, double drop = 0.0);

}  // namespace vibronic_td
