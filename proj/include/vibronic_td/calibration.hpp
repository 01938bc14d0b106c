#pragma once

// Interaction-picture laser Hamiltonians of a single trapped ion and the
// detuning, phase and displacement calibration experiments.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vibronic_td/quantum_core.hpp"

namespace vibronic_td {

struct LaserParams {
  /// Carrier Rabi frequency (rad/s).
  double Omega = 0.0;
  double eta = 0.084;
  double phi_C = 0.0;
  double phi_R = 0.0;
  double phi_B = 0.0;
  /// Symmetric detuning (rad/s).
  double delta = 0.0;

  /// eta = 0.084, Omega_S = eta Omega / 2 = 2pi x 0.850 kHz.
  static LaserParams standard();
  void validate() const;
  double omega_s() const { return eta * Omega / 2.0; }
  double phi_S() const { return (phi_R + phi_B) / 2.0; }
  double phi_M() const { return (phi_B - phi_R) / 2.0; }
};

/// sigma_+ = (sigma_x - i sigma_y)/2 = |1><0|.
struct InteractionHamiltonians {
  HilbertSpec spec;
  std::function<Matrix(double)> carrier;
  std::function<Matrix(double)> red;
  std::function<Matrix(double)> blue;
  std::function<Matrix(double)> bichromatic;
};

InteractionHamiltonians build_interaction_hamiltonians(const LaserParams& p, const HilbertSpec& spec);

struct ScanPoint {
  double x = 0.0;
  double p1 = 0.0;
  double stderr = 0.0;
};

struct ScanOptions {
  int n_max = 24;
  int workers = 0;
};

/// pi/2 - SDF(tau, phi_M) - SDF(tau, phi_M + pi) - inverse pi/2, P1 per offset.
std::vector<ScanPoint> detuning_scan(const LaserParams& p, const std::vector<double>& offsets, double pulse_time,
                                     const ScanOptions& opts = {});

/// pi/2 - SDF(tau) with phi_R = phi_B = phase - inverse pi/2, P1 per phase.
std::vector<ScanPoint> phase_scan(const LaserParams& p, const std::vector<double>& phases,
                                  double pulse_time = 150e-6, const ScanOptions& opts = {});

/// Purity of the spin after the first pi/2 pulse and one resonant SDF pulse
/// at spin phase phi_S (phi_R = phi_B = phi_S).
double sdf_spin_purity(const LaserParams& p, double phi_S, double pulse_time, const ScanOptions& opts = {});

/// RK4 step bound 1/(100 max(|delta|, Omega)).
double calibration_step(const LaserParams& p);

/// Generalized Laguerre L^1_k(x) by recurrence.
double laguerre_l1(int k, double x);

/// e^{-eta^2/2} eta Omega L^1_k(eta^2) / sqrt(k+1)
double bsb_rabi_frequency(int k, double Omega, double eta);

/// 1/2 (1 - e^{-zeta t - nbar} sum_k nbar^k/k! cos(Omega_k t))
std::vector<double> bsb_population(const std::vector<double>& t_grid, double Omega, double eta, double nbar,
                                   double zeta, int k_max);

/// Same with Poisson weights of mean |beta|^2.
std::vector<double> coherent_bsb_population(const std::vector<double>& t_grid, double Omega, double eta,
                                            double beta_abs, double zeta, int k_max);

/// k_max with Poisson(mean) tail below `tail`.
int bsb_k_max(double mean, double tail = 1e-10);

/// Blue-sideband drive of |0> (x) |beta> integrated with RK4; P1 on t_grid.
std::vector<double> simulate_bsb_population(const LaserParams& p, double beta_abs, const std::vector<double>& t_grid,
                                            int n_max = 30);

struct FitResult {
  std::map<std::string, double> params;
  std::vector<std::string> names;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string status;

  std::string to_json() const;
};

/// Levenberg-Marquardt fit of coherent_bsb_population for |beta| and zeta.
FitResult fit_displacement(const std::vector<std::pair<double, double>>& scan, const LaserParams& p);

/// y = offset + amplitude cos(2 pi x / period - phase), period free.
FitResult fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y);

/// Binomial sampling of populations with a per-point stream from (seed, index).
std::vector<ScanPoint> sample_scan(const std::vector<ScanPoint>& exact, int shots, std::uint64_t seed);

}  // namespace vibronic_td
