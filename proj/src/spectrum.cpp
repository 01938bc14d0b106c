#include "vibronic_td/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace vibronic_td {

namespace {

constexpr double kPi = std::numbers::pi;

void require_uniform_from_zero(const Autocorrelation& a) {
  a.validate();
  if (a.size() < 4) throw DomainError("spectrum needs at least 4 samples");
  if (a.t.front() != 0.0) throw DomainError("spectrum needs a time grid starting at 0");
  if (!a.uniform(1e-6)) throw DomainError("spectrum needs a uniform time grid");
}

void require_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("frequency grid is empty");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw DomainError("frequency grid must be strictly increasing");
  }
}

SpectrumResult base_result(const Autocorrelation& a, const std::vector<double>& grid, SpectrumMethod m) {
  SpectrumResult s;
  s.freq = grid;
  s.intensity.assign(grid.size(), 0.0);
  s.method = m;
  s.window_tau = a.window_tau;
  s.scale_factor = a.unit_map.scale_factor;
  return s;
}

Autocorrelation real_part(const Autocorrelation& a) {
  Autocorrelation r = a;
  for (auto& v : r.values) v = cplx(v.real(), 0.0);
  r.has_imaginary = false;
  return r;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

SpectrumResult transform(const Autocorrelation& a, const std::vector<double>& grid,
                         const ReconstructionOptions& opts) {
  if (opts.method == SpectrumMethod::FPA) return fourier_pade(a, opts.theta, grid, opts.fpa);
  return dft_spectrum(a, grid);
}

}  // namespace

// ---------------------------------------------------------------------------

void SpectrumResult::validate() const {
  if (freq.size() != intensity.size()) throw DomainError("spectrum axis and intensities differ in length");
  require_grid(freq);
  for (double v : intensity) {
    if (!std::isfinite(v)) throw NumericalError("spectrum has non-finite intensity");
  }
}

double SpectrumResult::spacing() const {
  if (freq.size() < 2) return 0.0;
  return (freq.back() - freq.front()) / (freq.size() - 1);
}

std::string SpectrumResult::to_csv() const {
  std::ostringstream os;
  os << "omega_rad_s,intensity\n";
  for (std::size_t k = 0; k < freq.size(); ++k) os << fmt(freq[k]) << ',' << fmt(intensity[k]) << '\n';
  return os.str();
}

Autocorrelation apply_window(const Autocorrelation& a, double tau) {
  if (!(tau > 0.0)) throw DomainError("window tau must be > 0");
  a.validate();
  Autocorrelation out = a;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double w = std::isinf(tau) ? 1.0 : std::exp(-a.t[k] / tau);
    out.values[k] *= w;
    if (!out.re_stderr.empty()) out.re_stderr[k] *= w;
    if (!out.im_stderr.empty()) out.im_stderr[k] *= w;
  }
  if (!std::isinf(tau)) {
    out.window_tau = a.window_tau ? 1.0 / (1.0 / *a.window_tau + 1.0 / tau) : tau;
  }
  return out;
}

SpectrumResult fourier_pade(const Autocorrelation& a, double theta, const std::vector<double>& freq_grid,
                            const FpaOptions& opts) {
  require_uniform_from_zero(a);
  require_grid(freq_grid);
  const int N = static_cast<int>(a.size());
  const int order = opts.order > 0 ? opts.order : N / 2;
  if (order > N / 2) throw DomainError("Pade order must not exceed half the number of samples");
  const int L = opts.numerator_degree >= 0 ? opts.numerator_degree : order / 2;
  const int M = order - L;
  if (L < 0 || M < 1) throw DomainError("Pade denominator degree must be >= 1");
  const double dt = a.dt();

  std::vector<cplx> c(N);
  for (int n = 0; n < N; ++n) c[n] = a.values[n] * std::exp(kI * (theta * a.t[n]));

  // sum_{k=1}^{M} b_k c_{n-k} = -c_n, n = L+1 .. N-1
  const int rows = N - 1 - L;
  if (rows < M) throw DomainError("too few samples for the requested Pade order");
  Matrix A = Matrix::Zero(rows, M);
  Vector rhs(rows);
  for (int r = 0; r < rows; ++r) {
    const int n = L + 1 + r;
    for (int k = 1; k <= M; ++k) {
      if (n - k >= 0) A(r, k - 1) = c[n - k];
    }
    rhs(r) = -c[n];
  }
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (!(smax > 0.0)) {
    std::ostringstream os;
    os << "Pade system of order [" << L << "/" << M << "] is singular";
    throw NumericalError(os.str());
  }
  const double lambda = opts.regularization * smax;
  Vector ub = svd.matrixU().adjoint() * rhs;
  for (Index k = 0; k < s.size(); ++k) ub(k) *= s(k) / (s(k) * s(k) + lambda * lambda);
  Vector b_tail = svd.matrixV() * ub;
  std::vector<cplx> b(M + 1);
  b[0] = 1.0;
  for (int k = 1; k <= M; ++k) b[k] = b_tail(k - 1);
  std::vector<cplx> p(L + 1);
  for (int n = 0; n <= L; ++n) {
    cplx acc = 0.0;
    for (int k = 0; k <= std::min(n, M); ++k) acc += b[k] * c[n - k];
    p[n] = acc;
  }

  SpectrumResult out = base_result(a, freq_grid, SpectrumMethod::FPA);
  out.order = order;
  out.numerator_degree = L;
  out.denominator_degree = M;
  out.theta = theta;
  std::vector<double> qabs(freq_grid.size());
  for (std::size_t g = 0; g < freq_grid.size(); ++g) {
    const cplx z = std::exp(kI * ((freq_grid[g] - theta) * dt));
    cplx pv = 0.0;
    for (int n = L; n >= 0; --n) pv = pv * z + p[n];
    cplx qv = 0.0;
    for (int k = M; k >= 0; --k) qv = qv * z + b[k];
    qabs[g] = std::abs(qv);
    out.intensity[g] = dt / kPi * (pv / qv - 0.5 * c[0]).real();
  }
  const double qmax = *std::max_element(qabs.begin(), qabs.end());
  const double qmin = *std::min_element(qabs.begin(), qabs.end());
  if (qmin < 1e-8 * qmax) {
    out.pole_warning = true;
    std::ostringstream os;
    os << "Pade denominator nearly vanishes on the grid (min |Q| / max |Q| = " << qmin / qmax
       << "); try a different theta";
    out.warnings.push_back(os.str());
    warn(out.warnings.back());
  }
  for (double& v : out.intensity) {
    if (!std::isfinite(v)) throw NumericalError("Pade spectrum is not finite; try a different theta");
  }
  return out;
}

SpectrumResult dft_spectrum(const Autocorrelation& a, const std::vector<double>& freq_grid) {
  require_uniform_from_zero(a);
  require_grid(freq_grid);
  const std::size_t N = a.size();
  const double dt = a.dt();
  SpectrumResult out = base_result(a, freq_grid, SpectrumMethod::DFT);
  for (std::size_t g = 0; g < freq_grid.size(); ++g) {
    const double w = freq_grid[g];
    cplx acc = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double weight = (n == 0 || n + 1 == N) ? 0.5 : 1.0;
      acc += weight * std::exp(kI * (w * a.t[n])) * a.values[n];
    }
    out.intensity[g] = dt / kPi * acc.real();
  }
  return out;
}

SpectrumResult shifted_full_spectrum(const Autocorrelation& a, double epsilon,
                                     const std::vector<double>& freq_grid, const ReconstructionOptions& opts) {
  std::vector<double> shifted(freq_grid.size());
  for (std::size_t k = 0; k < freq_grid.size(); ++k) shifted[k] = freq_grid[k] + epsilon;
  SpectrumResult s = transform(a, shifted, opts);
  s.freq = freq_grid;
  s.epsilon = epsilon;
  return s;
}

SpectrumResult reconstruct_from_real(const Autocorrelation& re_only, double epsilon,
                                     const std::vector<double>& freq_grid, const ReconstructionOptions& opts) {
  require_uniform_from_zero(re_only);
  require_grid(freq_grid);
  Autocorrelation re = real_part(re_only);
  std::vector<double> shifted(freq_grid.size());
  for (std::size_t k = 0; k < freq_grid.size(); ++k) shifted[k] = freq_grid[k] + epsilon;
  SpectrumResult s = transform(re, shifted, opts);
  for (std::size_t k = 0; k < freq_grid.size(); ++k) {
    s.intensity[k] = shifted[k] > 0.0 ? 2.0 * s.intensity[k] : 0.0;
  }
  s.freq = freq_grid;
  s.epsilon = epsilon;

  // Precondition check on a symmetric grid spanning the Nyquist band.
  const double dt = re_only.dt();
  const double T = re_only.t.back();
  const std::vector<double> sym = linspace(-kPi / dt, kPi / dt, 4096);
  double bad = 0.0;
  double total = 0.0;
  if (re_only.has_imaginary) {
    SpectrumResult full = dft_spectrum(re_only, sym);
    for (std::size_t k = 0; k < sym.size(); ++k) {
      const double v = std::max(0.0, full.intensity[k]);
      total += v;
      if (sym[k] <= 0.0) bad += v;
    }
  } else {
    SpectrumResult even = dft_spectrum(re, sym);
    const double cell = 2.0 * kPi / T;
    for (std::size_t k = 0; k < sym.size(); ++k) {
      const double v = std::max(0.0, even.intensity[k]);
      total += v;
      if (std::abs(sym[k]) <= cell) bad += v;
    }
  }
  if (total > 0.0 && bad / total > opts.weight_threshold) {
    std::ostringstream os;
    os << "Re-only reconstruction: " << 100.0 * bad / total << "% of the spectral weight lies at omega + eps <= 0"
       << " (eps = " << epsilon << " rad/s); increase eps";
    s.warnings.push_back(os.str());
    warn(s.warnings.back());
  }
  return s;
}

SpectrumResult restore_axis(const SpectrumResult& s, const UnitMap& u, double delta_E) {
  u.validate();
  if (s.frame == AxisFrame::Molecular) throw DomainError("spectrum axis already restored to molecular units");
  SpectrumResult out = s;
  for (double& w : out.freq) w = w / u.scale_factor + delta_E;
  out.frame = AxisFrame::Molecular;
  out.scale_factor = u.scale_factor;
  out.delta_E = delta_E;
  return out;
}

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 2) throw DomainError("linspace needs at least 2 points");
  std::vector<double> v(points);
  for (int k = 0; k < points; ++k) v[k] = lo + (hi - lo) * k / (points - 1);
  return v;
}

std::vector<double> default_frequency_grid(double dt, int points) {
  if (!(dt > 0.0)) throw DomainError("time step must be > 0");
  const double fsr = 2.0 * kPi / dt;
  return linspace(-0.2 * fsr, 1.2 * fsr, points);
}

std::vector<std::size_t> local_maxima(const SpectrumResult& s, double rel_threshold) {
  std::vector<std::size_t> out;
  const double top = max_intensity(s);
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    const double v = s.intensity[k];
    if (v > s.intensity[k - 1] && v >= s.intensity[k + 1] && v > rel_threshold * top) out.push_back(k);
  }
  return out;
}

std::size_t argmax_in(const SpectrumResult& s, double lo, double hi) {
  std::size_t best = s.size();
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.freq[k] < lo || s.freq[k] > hi) continue;
    if (best == s.size() || s.intensity[k] > s.intensity[best]) best = k;
  }
  if (best == s.size()) throw DomainError("no grid points in the requested band");
  return best;
}

double band_integral(const SpectrumResult& s, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double x0 = s.freq[k - 1];
    const double x1 = s.freq[k];
    const double a = std::max(lo, x0);
    const double b = std::min(hi, x1);
    if (b <= a) continue;
    const double y0 = s.intensity[k - 1];
    const double y1 = s.intensity[k];
    auto interp = [&](double x) { return y0 + (y1 - y0) * (x - x0) / (x1 - x0); };
    acc += 0.5 * (interp(a) + interp(b)) * (b - a);
  }
  return acc;
}

double max_intensity(const SpectrumResult& s) {
  if (s.intensity.empty()) return 0.0;
  return *std::max_element(s.intensity.begin(), s.intensity.end());
}

std::vector<double> normalized_max(const SpectrumResult& s) {
  const double top = max_intensity(s);
  std::vector<double> out = s.intensity;
  if (top > 0.0) {
    for (double& v : out) v /= top;
  }
  return out;
}

}  // namespace vibronic_td
