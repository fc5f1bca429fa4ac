#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qsmooth/analysis.hpp"
#include "qsmooth/errors.hpp"

using namespace qsmooth;

namespace {

BlochVector vec(const oracle::Bloch& b) { return {b[0], b[1], b[2]}; }

struct Tables {
  StateTable truth, filtered, smoothed, valid;
};

// Random states with a known structure: smoothed = filtered + shifts.
Tables random_tables(std::size_t records, std::size_t times, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tables t{StateTable(records, times), StateTable(records, times), StateTable(records, times),
           StateTable(records, times)};
  for (std::size_t r = 0; r < records; ++r) {
    for (std::size_t i = 0; i < times; ++i) {
      t.truth.at(r, i) = vec(oracle::random_pure(rng));
      t.filtered.at(r, i) = vec(oracle::random_bloch(rng, 0.6));
      t.smoothed.at(r, i) = t.filtered.at(r, i) + vec(oracle::random_bloch(rng, 0.3));
      t.valid.at(r, i) = t.filtered.at(r, i) + vec(oracle::random_bloch(rng, 0.3));
    }
  }
  return t;
}

WindowSummary summary(const Combo& c) {
  WindowSummary s;
  s.combo = c;
  return s;
}

}  // namespace

TEST_CASE("combo labels") {
  CHECK(Combo::all().size() == 27);
  const Combo c = Combo::parse("YXY");
  CHECK(c.label() == "dYdXdY");
  CHECK(Combo::parse("dNdXdN") == Combo{Setup::N, Setup::X, Setup::N});
  CHECK_FALSE(c.is_valid_smoothing());
  CHECK(Combo::parse("xxx").is_valid_smoothing());
  CHECK_THROWS_AS(Combo::parse("dYdX"), DomainError);
  CHECK_THROWS_AS(Combo::parse("dYdXdQ"), DomainError);
}

TEST_CASE("bootstrap standard error of a mean") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(3.0, 2.0);
  const std::size_t records = 400;
  Eigen::MatrixXd data(records, 2);
  for (std::size_t r = 0; r < records; ++r) {
    data(r, 0) = n(rng);
    data(r, 1) = 5.0;
  }
  const BootstrapPlan plan(records, 2000, 9);
  const Eigen::VectorXd se = plan.standard_errors(data);
  const double expected = column_sd(data)(0) / std::sqrt(static_cast<double>(records));
  CHECK(se(0) == doctest::Approx(expected).epsilon(0.1));
  CHECK(se(1) < 1e-12);
  CHECK_THROWS_AS(BootstrapPlan(0, 10, 1), DomainError);
  CHECK_THROWS_AS(plan.standard_errors(Eigen::MatrixXd::Zero(3, 1)), DomainError);
}

TEST_CASE("per-sample identity S = 2F - P and its power form") {
  const Tables t = random_tables(50, 20, 2);
  const PowerSamples s = power_samples(t.truth, t.filtered, t.smoothed, t.valid);
  CHECK((s.trsd - (2.0 * s.fidelity - s.purity)).cwiseAbs().maxCoeff() < 1e-12);

  std::vector<double> times(20);
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = 0.1 * static_cast<double>(i);
  const PowerSeries p = smoothing_powers(Combo::parse("NXY"), times, s, BootstrapPlan(50, 50, 3));
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(p.R_S[i] - (2 * p.R_F[i] - p.R_P[i])) < 1e-12);
}

TEST_CASE("delta-rho moments") {
  const Tables t = random_tables(10, 5, 4);
  const PowerSamples s = power_samples(t.truth, t.filtered, t.smoothed, t.valid);
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t i = 0; i < 5; ++i) {
      const Matrix2 du = bloch_to_state(t.smoothed.at(r, i)).matrix() - bloch_to_state(t.filtered.at(r, i)).matrix();
      const Matrix2 dv = bloch_to_state(t.valid.at(r, i)).matrix() - bloch_to_state(t.filtered.at(r, i)).matrix();
      const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(i);
      CHECK(s.delta_sq(ri, ci) == doctest::Approx((du * du).trace().real()).epsilon(1e-13));
      CHECK(s.delta_cross(ri, ci) == doctest::Approx((du * dv).trace().real()).epsilon(1e-13));
    }
  }
  const std::vector<Matrix2> d = delta_rho({bloch_to_state({0.1, 0.2, 0.3})}, {bloch_to_state({0.0, 0.4, -0.3})});
  CHECK(std::abs(d[0].trace()) < 1e-15);
}

TEST_CASE("alpha equals one exactly when the assumed and valid smoothers coincide") {
  const Tables t = random_tables(40, 10, 5);
  const PowerSamples s = power_samples(t.truth, t.filtered, t.valid, t.valid);
  const BootstrapPlan plan(40, 100, 6);
  const std::vector<double> times(10, 0.0);
  const std::vector<std::size_t> window{2, 3, 4, 5};
  const AlphaSeries a = alpha_coefficient(times, s, window, plan);
  for (double al : a.alpha) CHECK(std::abs(al - 1.0) < 1e-12);
  CHECK(std::abs(a.alpha_sq_average - 1.0) < 1e-12);
  CHECK(a.alpha_sq_err < 1e-12);
  const WindowSummary w = window_summary(Combo::parse("NNN"), s, s, window, plan);
  CHECK(std::abs(w.alpha.mean - 1.0) < 1e-12);
  CHECK(std::abs(w.R_S_delta.mean - w.delta_sq.mean) < 1e-12);
  CHECK(std::abs(w.R_F_delta_minus_valid.mean) < 1e-15);
}

TEST_CASE("alpha obeys Cauchy-Schwarz") {
  const Tables t = random_tables(40, 10, 7);
  const PowerSamples s = power_samples(t.truth, t.filtered, t.smoothed, t.valid);
  const AlphaSeries a = alpha_coefficient(std::vector<double>(10, 0.0), s, {0, 1, 2}, BootstrapPlan(40, 50, 1));
  for (double al : a.alpha) CHECK(std::abs(al) <= 1.0 + 1e-12);
}

TEST_CASE("steady-state window") {
  const std::vector<double> t{4.0, 4.5, 5.0, 5.5, 6.0, 6.5};
  CHECK(window_indices(t, 4.5, 6.0) == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK_THROWS_AS(window_indices(t, 7.0, 8.0), DomainError);
}

TEST_CASE("strange-regime verdict") {
  WindowSummary wrong = summary(Combo::parse("YXY"));
  WindowSummary valid = summary(Combo::parse("YXX"));
  wrong.delta_valid_sq = {0.1, 0.001};
  wrong.delta_sq = {0.5, 0.002};
  wrong.alpha = {0.9, 0.01};
  wrong.R_S = {-0.02, 0.005};
  wrong.R_F_minus_valid = {0.01, 0.004};
  wrong.R_S_delta = {-0.02, 0.001};
  wrong.R_F_delta_minus_valid = {0.01, 0.001};
  StrangeVerdict v = strange_regime_check(wrong, valid);
  CHECK(v.ratio == doctest::Approx(0.2));
  CHECK(v.bound == doctest::Approx(1.0 / (4 * 0.81)));
  CHECK(v.condition);
  CHECK(v.strange);
  CHECK(v.trsd_negative_2se);
  CHECK(v.fidelity_exceeds_2se);
  CHECK(v.consistent);
  CHECK(v.quarter);

  // A clear sign disagreement is inconsistent.
  wrong.R_S = {0.05, 0.005};
  v = strange_regime_check(wrong, valid);
  CHECK_FALSE(v.strange);
  CHECK_FALSE(v.consistent);
  // Unresolved at 2 s.e. counts as consistent.
  wrong.R_S = {0.005, 0.005};
  CHECK(strange_regime_check(wrong, valid).consistent);

  CHECK_THROWS_AS(strange_regime_check(wrong, summary(Combo::parse("NXX"))), DomainError);
  CHECK_THROWS_AS(strange_regime_check(wrong, summary(Combo::parse("YXN"))), DomainError);
}

TEST_CASE("conjecture labels follow the correlation table") {
  const CorrelationMatrix table = reference_table();
  auto label = [&](const char* c) { return conjecture_label(Combo::parse(c), table); };
  CHECK(label("XYN") == Conjecture::C1);
  CHECK(label("XNY") == Conjecture::C1);
  for (const char* c : {"YYN", "NNY", "YNY", "NYN"}) CHECK(label(c) == Conjecture::C4);
  for (const char* c : {"YXY", "YXN", "NXY", "NXN", "XNX", "XYX"}) CHECK(label(c) == Conjecture::C2);
  for (const char* c : {"NNX", "YYX", "XXN", "XXY", "NYX", "YNX"}) CHECK(label(c) == Conjecture::C3);
  CHECK(label("XXX") == Conjecture::none);
  int counts[5] = {};
  for (const Combo& c : Combo::all()) ++counts[static_cast<int>(conjecture_label(c, table))];
  CHECK(counts[0] == 9);
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 6);
  CHECK(counts[3] == 6);
  CHECK(counts[4] == 4);
}

TEST_CASE("conjecture checks on synthetic summaries") {
  const CorrelationMatrix table = reference_table();
  WindowSummary valid_nn = summary(Combo::parse("NNN"));
  valid_nn.delta_sq = {0.2, 0.01};
  WindowSummary c4 = summary(Combo::parse("NNY"));
  c4.R_S_delta = {0.17, 0.01};
  c4.delta_cross = {0.18, 0.01};
  c4.R_S_delta_minus_valid = {-0.03, 0.005};
  c4.R_F_delta_minus_valid = {-0.02, 0.005};
  c4.R_S_minus_valid = {0.0, 0.01};
  WindowSummary c3 = summary(Combo::parse("NNX"));
  c3.R_S_delta = {0.02, 0.01};
  c3.delta_cross = {0.03, 0.01};
  c3.R_S_delta_minus_valid = {-0.18, 0.01};
  c3.R_F_delta_minus_valid = {-0.17, 0.01};
  WindowSummary valid_xy = summary(Combo::parse("XYY"));
  valid_xy.delta_sq = {0.01, 0.001};
  WindowSummary c1 = summary(Combo::parse("XYN"));
  c1.R_S_delta = {0.004, 0.001};
  c1.delta_cross = {0.005, 0.001};

  const auto checks = conjecture_report({valid_nn, c4, c3, valid_xy, c1}, table);
  REQUIRE(checks.size() == 3);
  CHECK(checks[0].label == Conjecture::C4);
  CHECK(checks[0].pass);
  CHECK(checks[1].label == Conjecture::C3);
  CHECK(checks[1].pass);
  CHECK(checks[2].label == Conjecture::C1);
  CHECK(checks[2].pass);
  CHECK(checks[2].reference_power == doctest::Approx(0.2));

  c4.delta_cross = {0.05, 0.01};
  CHECK_FALSE(conjecture_report({valid_nn, c4}, table)[0].pass);
  CHECK_THROWS_AS(conjecture_report({c4}, table), DomainError);
}
