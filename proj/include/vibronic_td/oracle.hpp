#pragma once

// Frequency-domain references: eigenstate stick spectra, closed-form
// displaced-oscillator weights and autocorrelation, Lorentzian broadening.

#include <string>
#include <utility>
#include <vector>

#include "vibronic_td/spectrum.hpp"

namespace vibronic_td {

enum class StickOrigin { Eigen, AnalyticPoisson };

struct StickSpectrum {
  /// (frequency rad/s, weight)
  std::vector<std::pair<double, double>> lines;
  StickOrigin origin = StickOrigin::Eigen;

  double total_weight() const;
  /// frequency_rad_s,weight
  std::string to_csv() const;
};

/// Lines (w_n - w_0, |<Psi_n|mu|Psi_0>|^2) with weight > 1e-12, ascending.
/// w_0 = <Psi_0|H|Psi_0>.
StickSpectrum eigen_stick_spectrum(const OperatorMatrix& H, const OperatorMatrix& mu, const QuantumState& psi0);

/// k * omega with weights e^{-alpha^2} alpha^{2k} / k!, k < k_max.
StickSpectrum poisson_sticks(double omega, double alpha, int k_max);

/// exp(alpha^2 (e^{-i w t} - 1)) on simulator times t; w = F omega_b.
Autocorrelation analytic_so2_autocorrelation(const So2Params& p, const std::vector<double>& t_grid,
                                             const UnitMap& u = {});

/// Lorentzian broadening with half-width `linewidth`; intensities on freq_grid.
SpectrumResult convolve_sticks(const StickSpectrum& s, double linewidth, const std::vector<double>& freq_grid);

}  // namespace vibronic_td
