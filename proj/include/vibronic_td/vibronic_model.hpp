#pragma once

// Quadratic vibronic-coupling models, the reference-state expansion and the
// single-mode SO2 family. hbar = 1, energies are angular frequencies (rad/s).

#include <filesystem>
#include <string>
#include <vector>

#include "vibronic_td/quantum_core.hpp"

namespace vibronic_td {

struct QvcModel {
  int num_states = 1;
  std::vector<double> mode_freqs;
  /// c0(n, m)
  Matrix c0;
  /// c1[j](n, m)
  std::vector<Matrix> c1;
  /// c2[j][k](n, m), symmetric in (j, k)
  std::vector<std::vector<Matrix>> c2;
  bool zero_point_included = false;
  /// Electronic offset added back to the spectrum axis (rad/s).
  double delta_E = 0.0;

  /// All-zero couplings for d states and the given mode frequencies.
  static QvcModel zeros(int num_states, std::vector<double> mode_freqs);

  int num_modes() const { return static_cast<int>(mode_freqs.size()); }
  void validate(double tol = 1e-10) const;
  /// Matching Hilbert space with a uniform Fock cutoff.
  HilbertSpec hilbert_spec(int n_max) const;
};

struct So2Params {
  double omega_b = 0.0;
  double alpha = 0.0;
  double delta_E = 0.0;
  double omega_ground = 0.0;

  /// omega_b = 2pi x 12.44 THz, alpha = 1.716, delta_E = 0.
  static So2Params standard();
  void validate() const;
  /// Two-state QVC form: |0> = D0 with c1 = -sqrt2 omega_b alpha, |1> = free reference.
  QvcModel to_qvc() const;
};

struct UnitMap {
  double scale_factor = 1.0;
  std::string molecular_time_unit = "s";
  std::string simulator_time_unit = "s";

  static UnitMap standard();
  void validate() const;
  double to_simulator_frequency(double omega_molecular) const { return omega_molecular * scale_factor; }
  double to_molecular_frequency(double omega_simulator) const { return omega_simulator / scale_factor; }
  double to_molecular_time(double t_simulator) const { return t_simulator * scale_factor; }
  double to_simulator_time(double t_molecular) const { return t_molecular / scale_factor; }
};

/// sum_j w_j (n_j + zp/2) + sum_{n,m} C_{n,m} |n><m|
OperatorMatrix build_qvc_hamiltonian(const QvcModel& model, const HilbertSpec& spec);

/// The C_{n,m} coupling operator on the mode space.
Matrix coupling_block(const QvcModel& model, const HilbertSpec& spec, int n, int m);

/// sum_j w_j (n_j + zp/2) on the mode space.
Matrix free_mode_hamiltonian(const QvcModel& model, const HilbertSpec& spec);

/// <n|H|n> as a mode-space operator.
Matrix electronic_block(const OperatorMatrix& H, int level);

/// H (+) (H0 - eps) |ref><ref| on d+1 levels. H0 acts on the modes only.
OperatorMatrix expand_with_reference(const OperatorMatrix& H, const Matrix& H0, double epsilon);

struct So2Family {
  OperatorMatrix H_prime;
  OperatorMatrix H_dprime;
  cplx init_displacement;
  /// R_y(-pi/2) D(-alpha/2) (H' - dE|0><0|) D^+ R_y(pi/2) - H'' equals
  /// (w alpha^2/2) sigma_x - w alpha^2/4; the constant offset of the
  /// resulting spectrum is -alpha^2 w.
  double reorganization_shift = 0.0;
  /// Max deviation of the conjugation identity on the low-energy subspace.
  double conjugation_residual = 0.0;
};

So2Family build_so2_family(const So2Params& p, const HilbertSpec& spec, int check_levels = 16);

struct SimulatorFrequencies {
  double delta = 0.0;
  double omega_s = 0.0;
};

SimulatorFrequencies map_units(const So2Params& p, const UnitMap& u);

/// Reads {states, modes:[{omega_Hz}], c0, c1, c2, delta_E_Hz, zero_point}.
/// Energies in Hz are converted to rad/s. Complex entries are a number or [re, im].
QvcModel load_molecule(const std::filesystem::path& path);
QvcModel parse_molecule(const std::string& json_text);

}  // namespace vibronic_td
