#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "qsmooth/enumeration.hpp"
#include "qsmooth/errors.hpp"
#include "qsmooth/filtering.hpp"
#include "qsmooth/smoothing.hpp"

using namespace qsmooth;

namespace {

constexpr std::size_t kSteps = 5;

ModelParams coarse() {
  ModelParams p;
  p.dt = 0.02;
  p.t_f = 0.02 * kSteps;
  return p;
}

// A record with a click in the middle, from a state with a large excited population.
MeasurementRecord click_record() { return {Setup::N, 0.02, {0.0, 0.0, 1.0, 0.0, 0.0}}; }
MeasurementRecord homodyne_record() { return {Setup::X, 0.02, {0.21, -0.05, 0.33, 0.12, -0.27}}; }

QubitState start() { return bloch_to_state({0.6, 0.0, 0.8}); }

std::uint32_t to_mask(const std::vector<double>& u) {
  std::uint32_t m = 0;
  for (std::size_t j = 0; j < u.size(); ++j) m |= (u[j] == 1.0 ? 1u : 0u) << j;
  return m;
}

std::array<double, 3> components(const QubitState& s) {
  const BlochVector b = state_to_bloch(s);
  return {b.x, b.y, b.z};
}

}  // namespace

TEST_CASE("backward effect reproduces enumerated future likelihoods") {
  const ModelParams p = coarse();
  for (const MeasurementRecord& r : {click_record(), homodyne_record()}) {
    const BackwardEffect effect = backward_effect(r, p);
    const EnumerationOracle oracle(r, start(), p);
    REQUIRE(effect.steps() == kSteps);
    for (std::size_t j = 0; j <= kSteps; ++j) {
      CHECK(effect.effects[j].trace().real() == doctest::Approx(1.0).epsilon(1e-14));
      for (std::uint32_t prefix = 0; prefix < (1u << j); ++prefix) {
        QubitState past;
        try {
          past = oracle.conditioned_state(prefix, j);
        } catch (const DomainError&) {
          continue;  // impossible prefix, e.g. two clicks from one excitation
        }
        const double expected = oracle.future_likelihood(prefix, j);
        const double got = (effect.unscaled(j) * past.matrix()).trace().real();
        CHECK(std::abs(got - expected) <= 1e-10 * std::max(1.0, expected));
      }
    }
  }
}

TEST_CASE("sequential proposal frequencies match the enumerated proposal (chi-square)") {
  const ModelParams p = coarse();
  const MeasurementRecord r = click_record();
  const EnumerationOracle oracle(r, start(), p);
  SmootherOptions options;
  options.resample_threshold = 0.0;
  const std::size_t n = 200000;
  Engine rng = make_stream(17, StreamKind::hypothetical, {0});
  const SmoothingEnsemble ens = sample_hypothetical_records(r, Setup::N, n, start(), p, rng, options, true);

  std::map<std::uint32_t, double> counts, weighted;
  const auto& lf = ens.log_forward.back();
  double total_w = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint32_t m = to_mask(ens.records[k]);
    counts[m] += 1.0;
    weighted[m] += std::exp(lf[k]);
    total_w += std::exp(lf[k]);
  }

  // Cells with small expectations are pooled.
  double chi2 = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
  int cells = 0;
  for (std::uint32_t m = 0; m < oracle.record_count(); ++m) {
    const double expect = n * oracle.proposal_probability(m);
    const double obs = counts.count(m) ? counts[m] : 0.0;
    if (expect < 10.0) {
      pooled_obs += obs;
      pooled_exp += expect;
      continue;
    }
    chi2 += (obs - expect) * (obs - expect) / expect;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  REQUIRE(cells >= 3);
  const boost::math::chi_squared_distribution<> dist(cells - 1);
  CHECK(chi2 < boost::math::quantile(dist, 0.999));

  // Forward weights turn the proposal into the posterior p(<-U | <-O).
  for (std::uint32_t m = 0; m < oracle.record_count(); ++m) {
    const double post = oracle.posterior_probability(m);
    if (post < 1e-3) continue;
    const double est = (weighted.count(m) ? weighted[m] : 0.0) / total_w;
    CHECK(std::abs(est - post) < 6.0 * std::sqrt(post * (1 - post) / n));
  }
}

TEST_CASE("Monte-Carlo smoother converges to the enumerated smoother") {
  const ModelParams p = coarse();
  const MeasurementRecord r = click_record();
  const std::vector<QubitState> exact = brute_force_smooth(r, start(), p);
  const FilterResult f = filter(r, start(), p);
  const BackwardEffect effect = backward_effect(r, p);

  // The plain ratio estimator; the anchored one is pulled into the Bloch ball,
  // which biases it near the surface at small n.
  for (std::size_t n : {100, 1000, 10000}) {
    const std::size_t replicates = 40;
    std::vector<std::vector<std::array<double, 3>>> runs;
    for (std::size_t i = 0; i < replicates; ++i) {
      Engine rng = make_stream(21, StreamKind::hypothetical, {n, i});
      SmootherOptions o;
      o.n_samples = n;
      o.estimator = SmoothingEstimator::plain;
      const SmoothingResult s = smooth(r, Setup::N, f, effect, start(), p, rng, o);
      std::vector<std::array<double, 3>> c;
      for (const auto& st : s.states) c.push_back(components(st));
      runs.push_back(c);
    }
    double worst_single = 0.0, worst_mean = 0.0;
    for (std::size_t j = 0; j <= kSteps; ++j) {
      const auto e = components(exact[j]);
      for (int k = 0; k < 3; ++k) {
        std::vector<double> v;
        for (const auto& run : runs) v.push_back(run[j][k]);
        const auto ms = oracle::mean_se(v);
        const double sd = ms.se * std::sqrt(static_cast<double>(replicates));
        if (sd < 1e-10) {  // every replicate missed the same rare unobserved click
          CHECK(std::abs(ms.mean - e[k]) < 1e-3);
          continue;
        }
        worst_single = std::max(worst_single, std::abs(runs[0][j][k] - e[k]) / sd);
        worst_mean = std::max(worst_mean, std::abs(ms.mean - e[k]) / ms.se);
      }
    }
    MESSAGE("n = " << n << ": max |dev|/se single run " << worst_single << ", replicate mean " << worst_mean);
    CHECK(worst_single < 3.0);
    CHECK(worst_mean < 4.0);
  }
}

TEST_CASE("exhaustive sampling reaches the enumerated smoother to 1e-3") {
  const ModelParams p = coarse();
  for (const QubitState& rho0 : {start(), bloch_to_state({0.0, 0.6, -0.8})}) {
    const MeasurementRecord r = click_record();
    const std::vector<QubitState> exact = brute_force_smooth(r, rho0, p);
    for (SmoothingEstimator est : {SmoothingEstimator::filter_anchored, SmoothingEstimator::plain}) {
      Engine rng = make_stream(23, StreamKind::hypothetical, {static_cast<std::uint64_t>(est)});
      SmootherOptions o;
      o.estimator = est;
      const SmoothingResult s = smooth(r, Setup::N, 400000, rho0, p, rng, o);
      double worst = 0.0;
      for (std::size_t j = 0; j <= kSteps; ++j) {
        worst = std::max(worst, (s.states[j].matrix() - exact[j].matrix()).cwiseAbs().maxCoeff());
      }
      CHECK(worst < 1e-3);
    }
  }
}

TEST_CASE("filter-anchored estimate equals the filter at the final time") {
  ModelParams p;
  p.t_f = 1.0;
  Engine truth = make_stream(4, StreamKind::true_trajectory, {0});
  const TrueTrajectory t = generate_true_trajectory(Setup::Y, Setup::X, QubitState::ground(), p, truth);
  for (Setup dU : kAllSetups) {
    Engine rng = make_stream(4, StreamKind::hypothetical, {static_cast<std::uint64_t>(dU)});
    SmootherOptions o;
    o.stride = 10;
    const SmoothingResult s = smooth(t.record_O, dU, 200, QubitState::ground(), p, rng, o);
    const FilterResult f = filter(t.record_O, QubitState::ground(), p);
    CHECK(s.steps.back() == p.steps());
    CHECK((s.states.back().matrix() - f.states.back().matrix()).norm() < 1e-10);
    if (dU != Setup::X) {
      for (const QubitState& st : s.states) CHECK(std::abs(state_to_bloch(st).x) < 1e-12);
    }
  }
}

TEST_CASE("forward-weighted hypothetical ensemble reproduces the filter") {
  // The importance ratio for homodyne proposals is exact iff sum L rho / sum L
  // is an unbiased filter estimate.
  ModelParams p;
  p.t_f = 1.0;
  Engine truth = make_stream(5, StreamKind::true_trajectory, {0});
  const TrueTrajectory t = generate_true_trajectory(Setup::N, Setup::Y, QubitState::ground(), p, truth);
  const FilterResult f = filter(t.record_O, QubitState::ground(), p);
  for (Setup dU : {Setup::X, Setup::Y}) {
    const std::size_t replicates = 20;
    std::vector<std::vector<double>> comps(3);
    for (std::size_t i = 0; i < replicates; ++i) {
      Engine rng = make_stream(5, StreamKind::hypothetical, {static_cast<std::uint64_t>(dU), i});
      SmootherOptions o;
      o.stride = 100;
      const SmoothingEnsemble ens = sample_hypothetical_records(t.record_O, dU, 1000, QubitState::ground(), p, rng, o);
      double s = 0.0;
      Matrix2 acc = Matrix2::Zero();
      for (std::size_t k = 0; k < ens.n_samples; ++k) {
        const double w = std::exp(ens.log_forward.back()[k]);
        const Ket& psi = ens.pure_states.back()[k];
        acc += w * psi * psi.adjoint();
        s += w;
      }
      const BlochVector b = state_to_bloch(Matrix2(acc / s));
      comps[0].push_back(b.x), comps[1].push_back(b.y), comps[2].push_back(b.z);
    }
    const BlochVector e = state_to_bloch(f.states.back());
    const double expected[3] = {e.x, e.y, e.z};
    for (int k = 0; k < 3; ++k) {
      const auto ms = oracle::mean_se(comps[k]);
      CHECK(std::abs(ms.mean - expected[k]) < 4.0 * ms.se + 1e-12);
    }
  }
}

TEST_CASE("argument validation and grids") {
  const ModelParams p = coarse();
  Engine rng = make_stream(1, StreamKind::hypothetical, {0});
  CHECK_THROWS_AS(sample_hypothetical_records(click_record(), Setup::N, 0, start(), p, rng), DomainError);
  CHECK_THROWS_AS(sample_hypothetical_records(click_record(), Setup::N, 5, bloch_to_state({0.3, 0.0, 0.5}), p, rng),
                  DomainError);
  CHECK(output_grid(10, 4) == std::vector<std::size_t>{0, 4, 8, 10});
  CHECK(output_grid(8, 4) == std::vector<std::size_t>{0, 4, 8});
  CHECK_THROWS_AS(output_grid(8, 0), DomainError);
  SmoothingEnsemble ens = sample_hypothetical_records(click_record(), Setup::N, 10, start(), p, rng);
  CHECK_THROWS_AS(ensemble_smoothed_states(ens, filter(click_record(), start(), p).states), DomainError);
  CHECK_THROWS_AS(EnumerationOracle(MeasurementRecord{Setup::N, 0.02, std::vector<double>(17, 0.0)}, start(),
                                    [] {
                                      ModelParams q;
                                      q.dt = 0.02;
                                      q.t_f = 0.34;
                                      return q;
                                    }()),
                  DomainError);
}

TEST_CASE("ensemble path agrees with the streaming smoother") {
  const ModelParams p = coarse();
  const MeasurementRecord r = homodyne_record();
  SmootherOptions o;
  Engine a = make_stream(31, StreamKind::hypothetical, {0});
  Engine b = make_stream(31, StreamKind::hypothetical, {0});
  const FilterResult f = filter(r, start(), p);
  const BackwardEffect effect = backward_effect(r, p);
  o.n_samples = 300;
  const SmoothingResult streamed = smooth(r, Setup::Y, f, effect, start(), p, a, o);
  SmoothingEnsemble ens = sample_hypothetical_records(r, Setup::Y, 300, start(), p, b, o);
  attach_backward_effect(ens, effect);
  const SmoothingResult batch = ensemble_smoothed_states(ens, f.states);
  REQUIRE(batch.states.size() == streamed.states.size());
  for (std::size_t j = 0; j < batch.states.size(); ++j) {
    CHECK((batch.states[j].matrix() - streamed.states[j].matrix()).norm() < 1e-10);
  }
}
