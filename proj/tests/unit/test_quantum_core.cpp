#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "vibronic_td/quantum_core.hpp"

using namespace vibronic_td;

TEST_SUITE("quantum_core") {

TEST_CASE("tensor ordering puts the qudit first") {
  const HilbertSpec spec(3, {4, 5});
  CHECK(spec.dim() == 60);
  CHECK(basis_index(spec, 2, {1, 3}) == (2 * 4 + 1) * 5 + 3);
  const OperatorMatrix n1 = number_operator(spec, 1);
  const QuantumState s = basis_state(spec, 1, {2, 3});
  CHECK(s.expectation(n1).real() == doctest::Approx(3.0));
  CHECK(s.expectation(number_operator(spec, 0)).real() == doctest::Approx(2.0));
}

TEST_CASE("invalid specs and mismatched operators are rejected") {
  CHECK_THROWS_AS(HilbertSpec(0, {3}).validate(), DomainError);
  CHECK_THROWS_AS(HilbertSpec(2, {0}).validate(), DomainError);
  CHECK_THROWS_AS(HilbertSpec(1, {3}, true).validate(), DomainError);
  const OperatorMatrix a = identity(HilbertSpec(2, {3}));
  const OperatorMatrix b = identity(HilbertSpec(2, {4}));
  CHECK_THROWS_AS(a + b, DomainError);
  CHECK_THROWS_AS(build_ladder(HilbertSpec(2, {3}), 1), DomainError);
}

TEST_CASE("ladder commutator is the identity below the cutoff") {
  const Matrix a = ladder_matrix(8);
  const Matrix c = commutator(a, a.adjoint());
  for (int k = 0; k < 7; ++k) CHECK(c(k, k).real() == doctest::Approx(1.0));
  CHECK(c(7, 7).real() == doctest::Approx(-7.0));
}

TEST_CASE("position and momentum are Hermitian") {
  const HilbertSpec spec(2, {6});
  CHECK(position_operator(spec, 0).is_hermitian());
  CHECK(momentum_operator(spec, 0).is_hermitian());
}

TEST_CASE("displaced vacuum has Poisson populations") {
  const HilbertSpec spec(1, {30});
  const OperatorMatrix D = displacement_operator(spec, 0, cplx(1.0, 0.0));
  CHECK(D.is_unitary(1e-10));
  const Vector psi = D.matrix().col(0);
  // e^{-1} / k!
  const double expected[] = {0.36787944117144233, 0.36787944117144233, 0.18393972058572117,
                             0.061313240195240391, 0.015328310048810098};
  for (int k = 0; k < 5; ++k) CHECK(std::norm(psi(k)) == doctest::Approx(expected[k]).epsilon(1e-10));
}

TEST_CASE("displacement beyond the cutoff throws with a suggestion") {
  test::WarningCapture quiet;
  const HilbertSpec spec(1, {6});
  try {
    displacement_operator(spec, 0, cplx(3.0, 0.0));
    FAIL("expected TruncationError");
  } catch (const TruncationError& e) {
    CHECK(e.suggested_n_max() > 6);
  }
}

TEST_CASE("thermal state has the requested occupation") {
  const HilbertSpec spec(2, {12});
  const QuantumState rho = thermal_state(spec, 0, 0.061);
  CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rho.expectation(number_operator(spec, 0)).real() == doctest::Approx(0.061).epsilon(1e-9));
  CHECK_THROWS_AS(thermal_state(HilbertSpec(2, {3}), 0, 2.0), TruncationError);
}

TEST_CASE("rotations and Hadamard act on the chosen pair") {
  const HilbertSpec spec(3, {1});
  const Vector e0 = basis_state(spec, 0, {0}).vector();
  const Vector x = rotation_x(spec, std::numbers::pi, 0, 2).matrix() * e0;
  CHECK(std::abs(x(2) - cplx(0.0, -1.0)) < 1e-12);
  const Vector y = rotation_y(spec, std::numbers::pi / 2, 0, 1).matrix() * e0;
  CHECK(std::abs(y(1) - cplx(std::sqrt(0.5), 0.0)) < 1e-12);
  const OperatorMatrix h = hadamard(spec, 0, 1);
  CHECK(h.is_unitary());
  CHECK(std::abs(h.matrix()(2, 2) - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("states reject bad normalization") {
  const HilbertSpec spec(2, {2});
  CHECK_THROWS_AS(QuantumState::pure(spec, Vector::Ones(4)), DomainError);
  CHECK_THROWS_AS(QuantumState::density(spec, Matrix::Identity(4, 4)), DomainError);
  CHECK_THROWS_AS(QuantumState::pure(spec, Vector::Ones(3) / std::sqrt(3.0)), DomainError);
}

TEST_CASE("poisson cutoff matches tabulated tails") {
  CHECK(poisson_cutoff(2.944656, 1e-10) == 20);
  CHECK(poisson_cutoff(0.25, 1e-10) == 9);
  CHECK(poisson_cutoff(0.736164, 1e-6) == 9);
}

}
