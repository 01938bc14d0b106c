#pragma once

// Autocorrelation -> spectrum: windowing, Fourier-Pade with theta shift,
// direct quadrature, Re-only reconstruction and axis restoration.

#include <optional>
#include <string>
#include <vector>

#include "vibronic_td/protocol.hpp"

namespace vibronic_td {

enum class SpectrumMethod { FPA, DFT };
enum class AxisFrame { Simulator, Molecular };

struct SpectrumResult {
  /// rad/s
  std::vector<double> freq;
  std::vector<double> intensity;
  SpectrumMethod method = SpectrumMethod::DFT;
  int order = 0;
  int numerator_degree = 0;
  int denominator_degree = 0;
  double theta = 0.0;
  double epsilon = 0.0;
  std::optional<double> window_tau;
  AxisFrame frame = AxisFrame::Simulator;
  double scale_factor = 1.0;
  double delta_E = 0.0;
  /// Set when |Q| dropped below 1e-8 max|Q| on the grid.
  bool pole_warning = false;
  std::vector<std::string> warnings;

  std::size_t size() const { return freq.size(); }
  void validate() const;
  double spacing() const;
  /// omega_rad_s,intensity
  std::string to_csv() const;
};

Autocorrelation apply_window(const Autocorrelation& a, double tau);

struct FpaOptions {
  /// Total order L + M; 0 selects half the sample count.
  int order = 0;
  /// Numerator degree L; -1 selects an even split.
  int numerator_degree = -1;
  double regularization = 1e-12;
};

SpectrumResult fourier_pade(const Autocorrelation& a, double theta, const std::vector<double>& freq_grid,
                            const FpaOptions& opts = {});

/// sigma(omega) = (1/pi) Re int_0^T e^{i omega t} a(t) dt, trapezoid rule.
SpectrumResult dft_spectrum(const Autocorrelation& a, const std::vector<double>& freq_grid);

struct ReconstructionOptions {
  SpectrumMethod method = SpectrumMethod::DFT;
  double theta = 0.0;
  FpaOptions fpa;
  /// Fraction of spectral weight at omega + eps <= 0 that triggers a warning.
  double weight_threshold = 0.01;
};

/// 2 F[Re a](omega + eps) on omega > -eps, zero elsewhere. `re_only` is the
/// trace of the eps-shifted Hamiltonian; freq_grid is in the restored frame.
SpectrumResult reconstruct_from_real(const Autocorrelation& re_only, double epsilon,
                                     const std::vector<double>& freq_grid,
                                     const ReconstructionOptions& opts = {});

/// Spectrum of the eps-shifted full trace, translated back by -eps.
SpectrumResult shifted_full_spectrum(const Autocorrelation& a, double epsilon,
                                     const std::vector<double>& freq_grid,
                                     const ReconstructionOptions& opts = {});

/// omega_molecular = omega_simulator / F + delta_E. Throws if already restored.
SpectrumResult restore_axis(const SpectrumResult& s, const UnitMap& u, double delta_E);

/// n points over [-0.2, 1.2] x 2pi/dt.
std::vector<double> default_frequency_grid(double dt, int points = 2048);
std::vector<double> linspace(double lo, double hi, int points);

// Peak and area helpers on a sampled spectrum.
std::vector<std::size_t> local_maxima(const SpectrumResult& s, double rel_threshold = 1e-3);
std::size_t argmax_in(const SpectrumResult& s, double lo, double hi);
/// Trapezoid integral over [lo, hi] with linear interpolation at the edges.
double band_integral(const SpectrumResult& s, double lo, double hi);
double max_intensity(const SpectrumResult& s);
/// Intensities divided by their maximum.
std::vector<double> normalized_max(const SpectrumResult& s);

}  // namespace vibronic_td
