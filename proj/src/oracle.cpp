#include "vibronic_td/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace vibronic_td {

double StickSpectrum::total_weight() const {
  double acc = 0.0;
  for (const auto& [w, p] : lines) acc += p;
  return acc;
}

std::string StickSpectrum::to_csv() const {
  std::ostringstream os;
  os << "frequency_rad_s,weight\n";
  char buf[80];
  for (const auto& [w, p] : lines) {
    std::snprintf(buf, sizeof buf, "%.12e,%.12e\n", w, p);
    os << buf;
  }
  return os.str();
}

StickSpectrum eigen_stick_spectrum(const OperatorMatrix& H, const OperatorMatrix& mu, const QuantumState& psi0) {
  if (!psi0.is_pure()) throw DomainError("stick spectrum needs a pure initial state");
  if (!(H.spec() == mu.spec()) || !(H.spec() == psi0.spec())) {
    throw DomainError("stick spectrum operators act on different spaces");
  }
  if (!H.is_hermitian(1e-10 * std::max(1.0, max_abs(H.matrix())))) throw DomainError("H is not Hermitian");
  const Vector& psi = psi0.vector();
  const double w0 = psi.dot(H.matrix() * psi).real();
  Eigen::SelfAdjointEigenSolver<Matrix> es(H.matrix());
  Vector amp = es.eigenvectors().adjoint() * (mu.matrix() * psi);
  StickSpectrum out;
  out.origin = StickOrigin::Eigen;
  for (Index n = 0; n < amp.size(); ++n) {
    const double wgt = std::norm(amp(n));
    if (wgt > 1e-12) out.lines.emplace_back(es.eigenvalues()(n) - w0, wgt);
  }
  std::sort(out.lines.begin(), out.lines.end());
  return out;
}

StickSpectrum poisson_sticks(double omega, double alpha, int k_max) {
  // Log-space weights, no shared code with the operator layer.
  StickSpectrum out;
  out.origin = StickOrigin::AnalyticPoisson;
  const double a2 = alpha * alpha;
  for (int k = 0; k < k_max; ++k) {
    double log_w = -a2 - std::lgamma(k + 1.0);
    if (k > 0) log_w += k * std::log(a2);
    out.lines.emplace_back(k * omega, a2 == 0.0 ? (k == 0 ? 1.0 : 0.0) : std::exp(log_w));
  }
  return out;
}

Autocorrelation analytic_so2_autocorrelation(const So2Params& p, const std::vector<double>& t_grid,
                                             const UnitMap& u) {
  p.validate();
  u.validate();
  const double w = u.scale_factor * p.omega_b;
  const double a2 = p.alpha * p.alpha;
  std::vector<cplx> v(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) v[k] = std::exp(a2 * (std::exp(-kI * (w * t_grid[k])) - 1.0));
  return Autocorrelation::exact(t_grid, std::move(v), u);
}

SpectrumResult convolve_sticks(const StickSpectrum& s, double linewidth, const std::vector<double>& freq_grid) {
  if (!(linewidth > 0.0)) throw DomainError("linewidth must be > 0");
  SpectrumResult out;
  out.freq = freq_grid;
  out.intensity.assign(freq_grid.size(), 0.0);
  out.method = SpectrumMethod::DFT;
  for (std::size_t g = 0; g < freq_grid.size(); ++g) {
    double acc = 0.0;
    for (const auto& [w, p] : s.lines) {
      const double x = freq_grid[g] - w;
      acc += p * linewidth / (std::numbers::pi * (x * x + linewidth * linewidth));
    }
    out.intensity[g] = acc;
  }
  out.validate();
  return out;
}

}  // namespace vibronic_td
