#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "qsmooth/correlation.hpp"
#include "qsmooth/errors.hpp"
#include "qsmooth/io.hpp"

using namespace qsmooth;

namespace {

CorrelatorOptions small_options() {
  CorrelatorOptions o;
  o.n_trajectories = 400;
  o.duration = 24.0;
  return o;
}

CorrelatorSeries synthetic(std::vector<double> z) {
  CorrelatorSeries s;
  s.values = z;
  s.std_error.assign(z.size(), 1.0);
  s.tau.assign(z.size(), 0.0);
  return s;
}

}  // namespace

TEST_CASE("classification needs a contiguous band above threshold") {
  CHECK(classify_pair(synthetic({0, 6, 6, 6, 0})) == Correlation::nonzero);
  CHECK(classify_pair(synthetic({0, -6, -7, -5, 0})) == Correlation::nonzero);
  CHECK(classify_pair(synthetic({6, 6, 0, 6, 6})) == Correlation::zero);
  CHECK(classify_pair(synthetic({4.9, 4.9, 4.9, 4.9})) == Correlation::zero);
  CHECK(classify_pair(synthetic({6, 6, 0, 6, 6}), 5.0, 2) == Correlation::nonzero);
  CorrelatorSeries exact = synthetic({1, 1, 1});
  exact.std_error.assign(3, 0.0);
  CHECK(classify_pair(exact) == Correlation::nonzero);
  CorrelatorSeries empty = synthetic({0, 0, 0});
  empty.std_error.assign(3, 0.0);
  CHECK(classify_pair(empty) == Correlation::zero);
}

TEST_CASE("reference classification") {
  const CorrelationMatrix m = reference_table();
  int nonzero = 0;
  for (const auto& row : m)
    for (Correlation c : row) nonzero += c == Correlation::nonzero;
  CHECK(nonzero == 5);
  CHECK(m[setup_index(Setup::N)][setup_index(Setup::Y)] == Correlation::nonzero);
  CHECK(m[setup_index(Setup::X)][setup_index(Setup::N)] == Correlation::zero);
}

TEST_CASE("option validation") {
  ModelParams p;
  CorrelatorOptions o;
  CHECK_NOTHROW(o.validate(p));
  o.n_tau = 40;
  CHECK_THROWS_AS(o.validate(p), DomainError);
  o = CorrelatorOptions{};
  o.n_tau = 41;
  o.tau_max = 2.0005;
  CHECK_THROWS_AS(o.validate(p), DomainError);
  o = CorrelatorOptions{};
  o.duration = 5.0;
  CHECK_THROWS_AS(o.validate(p), DomainError);
}

TEST_CASE("photon-counting autocorrelation is resolved, N-X cross correlation is not") {
  ModelParams p;
  const CorrelatorSeries nn = two_time_correlator(Setup::N, Setup::N, p, small_options(), 77);
  CHECK(nn.tau.size() == 41);
  CHECK(nn.tau.front() == doctest::Approx(-2.0));
  CHECK(nn.tau.back() == doctest::Approx(2.0));
  CHECK(classify_pair(nn) == Correlation::nonzero);
  // Normalisation of a counting record: <dN^2>/dt is the click rate.
  CHECK(nn.norm_O > 0.0);
  CHECK(nn.norm_O * nn.norm_O < 0.5);

  const CorrelatorSeries nx = two_time_correlator(Setup::N, Setup::X, p, small_options(), 77);
  CHECK(classify_pair(nx) == Correlation::zero);
  CHECK(nx.norm_U == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("correlators do not depend on the thread count") {
  ModelParams p;
  CorrelatorOptions o = small_options();
  o.n_trajectories = 6;
  o.duration = 10.0;
  const CorrelatorSeries a = two_time_correlator(Setup::Y, Setup::N, p, o, 5, 1);
  const CorrelatorSeries b = two_time_correlator(Setup::Y, Setup::N, p, o, 5, 3);
  CHECK(a.values == b.values);
  CHECK(a.std_error == b.std_error);
  CHECK(a.label() == "dYdN");
}

TEST_CASE("correlator CSV layout") {
  ModelParams p;
  CorrelatorOptions o = small_options();
  o.n_trajectories = 3;
  o.duration = 10.0;
  const auto dir = std::filesystem::temp_directory_path() / "qsmooth_test_correlation";
  std::filesystem::create_directories(dir);
  write_correlators_csv(dir / "c.csv", {two_time_correlator(Setup::X, Setup::X, p, o, 1)});
  const CsvTable t = read_csv(dir / "c.csv", {"pair", "tau", "value", "stderr"});
  CHECK(t.rows.size() == 41);
  CHECK(t.rows.front()[0] == "dXdX");
  std::filesystem::remove_all(dir);
}
