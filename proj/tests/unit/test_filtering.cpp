#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qsmooth/enumeration.hpp"
#include "qsmooth/errors.hpp"
#include "qsmooth/filtering.hpp"

using namespace qsmooth;

namespace {

ModelParams coarse(std::size_t steps) {
  ModelParams p;
  p.dt = 0.02;
  p.t_f = 0.02 * static_cast<double>(steps);
  return p;
}

MeasurementRecord counting_record(std::uint32_t mask, std::size_t steps) {
  MeasurementRecord r{Setup::N, 0.02, std::vector<double>(steps)};
  for (std::size_t j = 0; j < steps; ++j) r.outcomes[j] = (mask >> j) & 1u;
  return r;
}

}  // namespace

TEST_CASE("filter matches the marginalised enumeration") {
  const ModelParams p = coarse(5);
  const QubitState rho0 = bloch_to_state({0.6, 0.0, 0.8});
  for (std::uint32_t mask : {0u, 2u, 9u}) {
    const MeasurementRecord r = counting_record(mask, 5);
    const FilterResult f = filter(r, rho0, p);
    const EnumerationOracle oracle(r, rho0, p);
    REQUIRE(f.states.size() == 6);
    for (std::size_t j = 0; j <= 5; ++j) {
      CHECK((f.states[j].matrix() - oracle.filtered()[j].matrix()).norm() < 1e-12);
    }
  }
}

TEST_CASE("observed-record likelihoods are normalised") {
  const ModelParams p = coarse(6);
  const QubitState rho0 = bloch_to_state({0.0, 0.3, 0.9});
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < 64; ++mask) total += std::exp(filter(counting_record(mask, 6), rho0, p).log_likelihood);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("filtered states average to the master-equation solution") {
  ModelParams p;
  p.dt = 0.01;
  p.t_f = 1.0;
  QubitState expected = QubitState::ground();
  for (std::size_t j = 0; j < p.steps(); ++j) expected = lindblad_step(expected, p);
  const BlochVector e = state_to_bloch(expected);

  for (auto [o, v] : {std::pair{Setup::X, Setup::Y}, std::pair{Setup::N, Setup::X}}) {
    const std::size_t n = 3000;
    std::vector<double> ys(n), zs(n), xs(n);
    for (std::size_t i = 0; i < n; ++i) {
      Engine rng = make_stream(8, StreamKind::true_trajectory, {static_cast<std::uint64_t>(o), i});
      const TrueTrajectory t = generate_true_trajectory(o, v, QubitState::ground(), p, rng);
      const BlochVector b = state_to_bloch(filter(t.record_O, QubitState::ground(), p).states.back());
      xs[i] = b.x, ys[i] = b.y, zs[i] = b.z;
    }
    const auto mx = oracle::mean_se(xs), my = oracle::mean_se(ys), mz = oracle::mean_se(zs);
    CHECK(std::abs(mx.mean - e.x) <= 4.5 * mx.se + 1e-12);
    CHECK(std::abs(my.mean - e.y) < 4.5 * my.se);
    CHECK(std::abs(mz.mean - e.z) < 4.5 * mz.se);
  }
}

TEST_CASE("filtered x-component vanishes for N and Y records") {
  ModelParams p;
  p.t_f = 2.0;
  for (Setup o : {Setup::N, Setup::Y}) {
    Engine rng = make_stream(9, StreamKind::true_trajectory, {static_cast<std::uint64_t>(o)});
    const TrueTrajectory t = generate_true_trajectory(o, Setup::X, QubitState::ground(), p, rng);
    for (const QubitState& s : filter(t.record_O, QubitState::ground(), p).states) {
      CHECK(std::abs(state_to_bloch(s).x) < 1e-12);
    }
  }
}

TEST_CASE("impossible click raises InconsistentRecordError") {
  ModelParams p = coarse(3);
  p.omega = 0.0;
  CHECK_THROWS_AS(filter(counting_record(1u, 3), QubitState::ground(), p), InconsistentRecordError);
  CHECK_THROWS_AS(filter(counting_record(1u, 4), QubitState::ground(), p), DomainError);
}
