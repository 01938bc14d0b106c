#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "vibronic_td/experiment.hpp"
#include "vibronic_td/oracle.hpp"

using namespace vibronic_td;

TEST_SUITE("oracle") {

TEST_CASE("Poisson sticks for alpha = 1.716") {
  const double expected[] = {0.05262015803756623, 0.1549482640862676,  0.22813466776560617, 0.22392603941466627,
                             0.16484628887965838, 0.09708312272544385, 0.04764606663870242};
  const StickSpectrum s = poisson_sticks(2.0, 1.716, 40);
  for (int k = 0; k < 7; ++k) {
    CHECK(s.lines[k].first == doctest::Approx(2.0 * k));
    CHECK(s.lines[k].second == doctest::Approx(expected[k]).epsilon(1e-12));
  }
  CHECK(s.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(poisson_sticks(1.0, 0.0, 3).lines[0].second == 1.0);
}

TEST_CASE("closed-form SO2 autocorrelation") {
  const Autocorrelation a = analytic_so2_autocorrelation(So2Params::standard(), {0.0, 1e-4, 5e-4}, UnitMap::standard());
  CHECK(std::abs(a.values[0] - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(a.values[1] - cplx(-0.18321260306392953, -0.11419373307741683)) < 1e-12);
  CHECK(std::abs(a.values[2] - cplx(-0.21741629933978612, 0.2162908692031944)) < 1e-12);
}

TEST_CASE("eigen sticks of the SO2 model follow the Poisson ladder") {
  const SimulatorFrequencies f = map_units(So2Params::standard(), UnitMap::standard());
  const StickSpectrum eig = so2_sticks(So2Params::standard(), UnitMap::standard(), 40);
  const StickSpectrum ref = poisson_sticks(f.delta, 1.716, 40);
  CHECK(eig.origin == StickOrigin::Eigen);
  CHECK(eig.total_weight() == doctest::Approx(1.0).epsilon(1e-9));
  for (int k = 0; k < 8; ++k) {
    double best = 0.0, at = 0.0;
    for (const auto& [w, p] : eig.lines) {
      if (std::abs(w - k * f.delta) < 0.5 * f.delta && p > best) {
        best = p;
        at = w;
      }
    }
    CHECK(at == doctest::Approx(k * f.delta).epsilon(1e-8).scale(f.delta));
    CHECK(best == doctest::Approx(ref.lines[k].second).epsilon(1e-8));
  }
}

TEST_CASE("eigen sticks of a two-level system") {
  const HilbertSpec spec(2, {1});
  Matrix h(2, 2);
  h << 0.0, 1.0, 1.0, 0.0;
  const OperatorMatrix H(h, spec, true);
  const OperatorMatrix mu = identity(spec);
  const StickSpectrum s = eigen_stick_spectrum(H, mu, basis_state(spec, 0, {0}));
  REQUIRE(s.lines.size() == 2);
  CHECK(s.lines[0].first == doctest::Approx(-1.0));
  CHECK(s.lines[1].first == doctest::Approx(1.0));
  CHECK(s.lines[0].second == doctest::Approx(0.5));
  CHECK_THROWS_AS(eigen_stick_spectrum(H, mu, basis_state(spec, 0, {0}).as_density()), DomainError);
}

TEST_CASE("Lorentzian broadening conserves weight and peaks at w / (pi gamma)") {
  StickSpectrum s;
  s.lines = {{0.0, 0.25}};
  const SpectrumResult b = convolve_sticks(s, 2.0, linspace(-4000.0, 4000.0, 80001));
  CHECK(b.intensity[40000] == doctest::Approx(0.25 / (std::numbers::pi * 2.0)));
  CHECK(band_integral(b, -4000.0, 4000.0) == doctest::Approx(0.25).epsilon(1e-3));
  CHECK_THROWS_AS(convolve_sticks(s, 0.0, {0.0, 1.0}), DomainError);
  CHECK(s.to_csv() == "frequency_rad_s,weight\n0.000000000000e+00,2.500000000000e-01\n");
}

}
