#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "vibronic_td/spectrum.hpp"

using namespace vibronic_td;
using test::kTwoPi;

namespace {

// sum_j c_j exp(-i w_j t - t / tau)
Autocorrelation damped_lines(const std::vector<std::pair<double, double>>& lines, double tau, int n, double dt) {
  std::vector<double> t(n);
  std::vector<cplx> v(n);
  for (int k = 0; k < n; ++k) {
    t[k] = k * dt;
    for (const auto& [w, c] : lines) v[k] += c * std::exp(cplx(-t[k] / tau, -w * t[k]));
  }
  return Autocorrelation::exact(t, v);
}

}  // namespace

TEST_SUITE("spectrum") {

TEST_CASE("a single damped line is a Lorentzian of height tau/pi") {
  const double w0 = kTwoPi * 2e3, tau = 2e-3;
  const Autocorrelation a = damped_lines({{w0, 1.0}}, tau, 400, 1e-5);
  const std::vector<double> grid = linspace(w0 - 5e3, w0 + 5e3, 2001);
  for (const SpectrumResult& s : {fourier_pade(a, 0.0, grid), dft_spectrum(a, grid)}) {
    const std::size_t k = argmax_in(s, grid.front(), grid.back());
    CHECK(std::abs(s.freq[k] - w0) <= s.spacing());
    CHECK(s.intensity[k] == doctest::Approx(tau / std::numbers::pi).epsilon(0.02));
  }
}

TEST_CASE("Pade resolves two lines beyond the DFT resolution") {
  const double w1 = kTwoPi * 1e3, w2 = kTwoPi * 1.3e3;
  // Record length 1 ms: 1/T = 1 kHz > line separation.
  const Autocorrelation a = damped_lines({{w1, 0.7}, {w2, 0.3}}, 20e-3, 100, 1e-5);
  const std::vector<double> grid = linspace(kTwoPi * 0.5e3, kTwoPi * 1.8e3, 4001);
  const SpectrumResult s = fourier_pade(a, 0.0, grid);
  const std::size_t k1 = argmax_in(s, kTwoPi * 0.9e3, kTwoPi * 1.15e3);
  const std::size_t k2 = argmax_in(s, kTwoPi * 1.15e3, kTwoPi * 1.4e3);
  CHECK(std::abs(s.freq[k1] - w1) <= 2.0 * s.spacing());
  CHECK(std::abs(s.freq[k2] - w2) <= 2.0 * s.spacing());
  CHECK(s.intensity[k1] > s.intensity[k2]);
}

TEST_CASE("Pade spectrum does not depend on the theta shift") {
  const Autocorrelation a = damped_lines({{kTwoPi * 1e3, 0.6}, {kTwoPi * 2.5e3, 0.4}}, 3e-3, 200, 1e-5);
  const std::vector<double> grid = linspace(0.0, kTwoPi * 4e3, 801);
  const SpectrumResult s0 = fourier_pade(a, 0.0, grid);
  const SpectrumResult s1 = fourier_pade(a, kTwoPi * 8e3, grid);
  const double top = max_intensity(s0);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(s0.intensity[k] - s1.intensity[k]) < 1e-6 * top);
}

TEST_CASE("window multiplies by exp(-t/tau) and composes") {
  const Autocorrelation a = Autocorrelation::exact({0.0, 1e-3, 2e-3}, {1.0, 1.0, 1.0});
  const Autocorrelation w = apply_window(a, 1e-3);
  CHECK(w.values[2].real() == doctest::Approx(std::exp(-2.0)));
  CHECK(*w.window_tau == doctest::Approx(1e-3));
  const Autocorrelation ww = apply_window(w, 1e-3);
  CHECK(*ww.window_tau == doctest::Approx(0.5e-3));
  CHECK_THROWS_AS(apply_window(a, 0.0), DomainError);
}

TEST_CASE("real-part reconstruction matches the full trace for well separated lines") {
  test::WarningCapture quiet;
  const double eps = kTwoPi * 20e3;
  // Lines at w + eps with w in {0, 1 kHz}.
  const Autocorrelation shifted = damped_lines({{eps, 0.5}, {eps + kTwoPi * 1e3, 0.5}}, 5e-3, 800, 2e-6);
  const std::vector<double> grid = linspace(-kTwoPi * 2e3, kTwoPi * 3e3, 501);
  const SpectrumResult full = shifted_full_spectrum(shifted, eps, grid);
  const SpectrumResult re = reconstruct_from_real(shifted, eps, grid);
  const double top = max_intensity(full);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(full.intensity[k] - re.intensity[k]) < 0.02 * top);
}

TEST_CASE("axis restoration maps to the molecular frame once") {
  SpectrumResult s;
  s.freq = {0.0, 1.0};
  s.intensity = {1.0, 2.0};
  UnitMap u;
  u.scale_factor = 0.5;
  const SpectrumResult m = restore_axis(s, u, 10.0);
  CHECK(m.freq[1] == doctest::Approx(12.0));
  CHECK(m.frame == AxisFrame::Molecular);
  CHECK_THROWS_AS(restore_axis(m, u, 10.0), DomainError);
}

TEST_CASE("grid and peak helpers") {
  const auto g = default_frequency_grid(1e-3, 11);
  CHECK(g.front() == doctest::Approx(-0.2 * kTwoPi / 1e-3));
  CHECK(g.back() == doctest::Approx(1.2 * kTwoPi / 1e-3));
  SpectrumResult s;
  s.freq = linspace(0.0, 4.0, 5);
  s.intensity = {0.0, 1.0, 0.0, 2.0, 0.0};
  CHECK(local_maxima(s) == std::vector<std::size_t>{1, 3});
  CHECK(band_integral(s, 0.0, 2.0) == doctest::Approx(1.0));
  CHECK(band_integral(s, 0.5, 1.0) == doctest::Approx(0.375));
  CHECK(normalized_max(s)[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(argmax_in(s, 10.0, 11.0), DomainError);
}

TEST_CASE("Pade rejects orders beyond half the record") {
  const Autocorrelation a = damped_lines({{1.0, 1.0}}, 1.0, 10, 0.1);
  FpaOptions o;
  o.order = 6;
  CHECK_THROWS_AS(fourier_pade(a, 0.0, {0.0, 1.0}, o), DomainError);
}

}
