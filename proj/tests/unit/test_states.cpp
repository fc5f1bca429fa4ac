#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qsmooth/errors.hpp"
#include "qsmooth/states.hpp"

using namespace qsmooth;

namespace {

BlochVector to_vec(const oracle::Bloch& b) { return {b[0], b[1], b[2]}; }

// Hilbert-Schmidt quantities computed from matrix entries, not Bloch vectors.
double hs(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) { return (a * b).trace().real(); }

}  // namespace

TEST_CASE("basis states and Bloch conventions") {
  CHECK(state_to_bloch(QubitState::excited()) == BlochVector{0, 0, 1});
  CHECK(state_to_bloch(QubitState::ground()) == BlochVector{0, 0, -1});
  CHECK(state_to_bloch(QubitState::maximally_mixed()) == BlochVector{0, 0, 0});

  Ket plus_y;
  plus_y << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
  const BlochVector b = ket_to_bloch(plus_y);
  CHECK(b.x == doctest::Approx(0.0));
  CHECK(b.y == doctest::Approx(1.0));
  CHECK(b.z == doctest::Approx(0.0));
}

TEST_CASE("Bloch round trip matches the explicit density matrix") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const oracle::Bloch b = oracle::random_bloch(rng);
    const QubitState rho = bloch_to_state(to_vec(b));
    CHECK((rho.matrix() - oracle::density(b)).norm() < 1e-15);
    const BlochVector back = state_to_bloch(rho);
    CHECK(std::abs(back.x - b[0]) < 1e-15);
    CHECK(std::abs(back.y - b[1]) < 1e-15);
    CHECK(std::abs(back.z - b[2]) < 1e-15);
    CHECK_NOTHROW(rho.validate());
  }
}

TEST_CASE("states outside the Bloch ball are rejected") {
  CHECK_THROWS_AS(bloch_to_state({0.0, 0.8, 0.8}), DomainError);
  Matrix2 bad;
  bad << 1.2, 0.0, 0.0, -0.2;
  CHECK_THROWS_AS(QubitState(bad).validate(), DomainError);
  Matrix2 non_hermitian;
  non_hermitian << 0.5, 0.3, 0.1, 0.5;
  CHECK_THROWS_AS(QubitState(non_hermitian).validate(), DomainError);
}

TEST_CASE("measures agree with Hilbert-Schmidt definitions") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::random_bloch(rng);
    const auto b = oracle::random_bloch(rng);
    const auto ma = oracle::density(a), mb = oracle::density(b);
    const QubitState ra(ma), rb(mb);
    CHECK(purity(ra) == doctest::Approx(hs(ma, ma)).epsilon(1e-14));
    CHECK(trsd(ra, rb) == doctest::Approx(hs(ma - mb, ma - mb)).epsilon(1e-13));
    CHECK(fidelity(ra, rb) == doctest::Approx(hs(ma, mb)).epsilon(1e-14));
    CHECK(purity(to_vec(a)) == doctest::Approx(purity(ra)).epsilon(1e-14));
    CHECK(trsd(to_vec(a), to_vec(b)) == doctest::Approx(trsd(ra, rb)).epsilon(1e-12));
    CHECK(fidelity(to_vec(a), to_vec(b)) == doctest::Approx(fidelity(ra, rb)).epsilon(1e-14));
  }
}

TEST_CASE("S = P - 2F + 1 against a pure reference") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const QubitState rho = bloch_to_state(to_vec(oracle::random_bloch(rng)));
    const QubitState truth = bloch_to_state(to_vec(oracle::random_pure(rng)));
    CHECK(std::abs(trsd(rho, truth) - (purity(rho) - 2.0 * fidelity(rho, truth) + 1.0)) < 1e-12);
  }
}

TEST_CASE("Jozsa fidelity flag") {
  const QubitState mixed_a = bloch_to_state({0.3, 0.0, 0.1});
  const QubitState mixed_b = bloch_to_state({0.0, -0.2, 0.4});
  CHECK_FALSE(fidelity_checked(mixed_a, mixed_b).jozsa);
  CHECK(fidelity_checked(mixed_a, QubitState::ground()).jozsa);
  CHECK(fidelity_checked(mixed_a, QubitState::ground()).value == doctest::Approx(0.5 * (1.0 - 0.1)));
}

TEST_CASE("purity and minimum eigenvalue") {
  CHECK(is_pure(QubitState::excited()));
  CHECK_FALSE(is_pure(QubitState::maximally_mixed()));
  CHECK(min_eigenvalue(bloch_to_state({0.0, 0.0, 0.6})) == doctest::Approx(0.2));
  CHECK(min_eigenvalue(QubitState::ground()) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("clamping to the Bloch ball") {
  bool clamped = true;
  const BlochVector inside{0.1, 0.2, 0.3};
  CHECK(clamp_to_ball(inside, &clamped) == inside);
  CHECK_FALSE(clamped);
  const BlochVector out = clamp_to_ball({0.0, 3.0, 4.0}, &clamped);
  CHECK(clamped);
  CHECK(out.y == doctest::Approx(0.6));
  CHECK(out.z == doctest::Approx(0.8));
}
