#include "qsmooth/correlation.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qsmooth/errors.hpp"
#include "qsmooth/io.hpp"
#include "qsmooth/parallel.hpp"
#include "qsmooth/rng.hpp"
#include "qsmooth/unraveling.hpp"

namespace qsmooth {

namespace {

std::size_t block_steps(const ModelParams& p, const CorrelatorOptions& o) {
  const double spacing = 2.0 * o.tau_max / static_cast<double>(o.n_tau - 1);
  return static_cast<std::size_t>(std::llround(spacing / p.dt));
}

struct TrajectoryMoments {
  std::vector<double> lagged;  // mean of r_O(t + tau) r_U(t) per lag
  double sum_O = 0.0, sum_U = 0.0;
  double sq_O = 0.0, sq_U = 0.0;  // sums of dJ^2
  std::size_t blocks = 0;
  std::size_t steps = 0;
};

}  // namespace

void CorrelatorOptions::validate(const ModelParams& p) const {
  if (n_tau < 3 || n_tau % 2 == 0) throw DomainError("correlator tau grid needs an odd number (>= 3) of points");
  if (!(tau_max > 0.0)) throw DomainError("correlator tau_max must be positive");
  if (n_trajectories < 2) throw DomainError("correlator needs at least two trajectories for error bars");
  if (!(burn_in >= 0.0)) throw DomainError("correlator burn_in must be non-negative");
  if (!(duration - burn_in > 2.0 * tau_max)) {
    throw DomainError("stationary window is shorter than the correlator lag range");
  }
  const double spacing = 2.0 * tau_max / static_cast<double>(n_tau - 1);
  const double ratio = spacing / p.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 || ratio < 1.0) {
    throw DomainError("tau grid spacing must be a whole number of time steps");
  }
  if (!(threshold > 0.0) || min_band == 0) throw DomainError("invalid classification rule");
}

CorrelatorSeries two_time_correlator(Setup dO, Setup dU, const ModelParams& p, const CorrelatorOptions& options,
                                     std::uint64_t master_seed, unsigned threads) {
  options.validate(p);
  ModelParams run = p;
  run.t_i = 0.0;
  run.t_f = options.duration;
  const std::size_t block = block_steps(p, options);
  const std::size_t first = static_cast<std::size_t>(std::llround(options.burn_in / p.dt));
  const std::size_t half = options.n_tau / 2;
  const std::uint64_t pair_key = 3 * setup_index(dO) + setup_index(dU);

  std::vector<TrajectoryMoments> moments(options.n_trajectories);
  parallel_for(options.n_trajectories, threads, [&](std::size_t i) {
    Engine rng = make_stream(master_seed, StreamKind::correlator, {pair_key, i});
    const TrueTrajectory traj = generate_true_trajectory(dO, dU, QubitState::ground(), run, rng, run.steps());
    const auto& o = traj.record_O.outcomes;
    const auto& u = traj.record_V.outcomes;
    TrajectoryMoments& m = moments[i];
    const std::size_t n_blocks = (o.size() - first) / block;
    std::vector<double> rate_O(n_blocks), rate_U(n_blocks);
    const double scale = 1.0 / (static_cast<double>(block) * p.dt);
    for (std::size_t b = 0; b < n_blocks; ++b) {
      double so = 0.0, su = 0.0;
      for (std::size_t s = first + b * block; s < first + (b + 1) * block; ++s) {
        so += o[s];
        su += u[s];
        m.sq_O += o[s] * o[s];
        m.sq_U += u[s] * u[s];
      }
      rate_O[b] = so * scale;
      rate_U[b] = su * scale;
      m.sum_O += rate_O[b];
      m.sum_U += rate_U[b];
    }
    m.blocks = n_blocks;
    m.steps = n_blocks * block;
    m.lagged.assign(options.n_tau, 0.0);
    for (std::size_t k = 0; k < options.n_tau; ++k) {
      const long lag = static_cast<long>(k) - static_cast<long>(half);
      double acc = 0.0;
      std::size_t count = 0;
      for (long t = 0; t < static_cast<long>(n_blocks); ++t) {
        const long s = t + lag;
        if (s < 0 || s >= static_cast<long>(n_blocks)) continue;
        acc += rate_O[static_cast<std::size_t>(s)] * rate_U[static_cast<std::size_t>(t)];
        ++count;
      }
      m.lagged[k] = acc / static_cast<double>(count);
    }
  });

  double sum_O = 0.0, sum_U = 0.0, sq_O = 0.0, sq_U = 0.0;
  std::size_t blocks = 0, steps = 0;
  for (const auto& m : moments) {
    sum_O += m.sum_O;
    sum_U += m.sum_U;
    sq_O += m.sq_O;
    sq_U += m.sq_U;
    blocks += m.blocks;
    steps += m.steps;
  }
  const double mean_O = sum_O / static_cast<double>(blocks);
  const double mean_U = sum_U / static_cast<double>(blocks);

  CorrelatorSeries out;
  out.observed = dO;
  out.unobserved = dU;
  out.n_trajectories = options.n_trajectories;
  out.norm_O = std::sqrt(sq_O / static_cast<double>(steps) / p.dt);
  out.norm_U = std::sqrt(sq_U / static_cast<double>(steps) / p.dt);
  const double norm = out.norm_O * out.norm_U;
  if (!(norm > 0.0)) throw IntegrationError("correlator normalisation vanished (no signal in a record)");
  const double n = static_cast<double>(options.n_trajectories);
  for (std::size_t k = 0; k < options.n_tau; ++k) {
    out.tau.push_back((static_cast<double>(k) - static_cast<double>(half)) * static_cast<double>(block) * p.dt);
    double s = 0.0, s2 = 0.0;
    for (const auto& m : moments) {
      const double c = (m.lagged[k] - mean_O * mean_U) / norm;
      s += c;
      s2 += c * c;
    }
    const double mean = s / n;
    const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
    out.values.push_back(mean);
    out.std_error.push_back(std::sqrt(var / n));
  }
  return out;
}

Correlation classify_pair(const CorrelatorSeries& series, double threshold, std::size_t min_band) {
  std::size_t run = 0;
  for (std::size_t k = 0; k < series.values.size(); ++k) {
    const double se = series.std_error[k];
    // Zero spread with a nonzero value is exact (e.g. antibunching at tau = 0).
    const bool strong = se > 0.0 ? std::abs(series.values[k]) / se >= threshold : std::abs(series.values[k]) > 1e-12;
    run = strong ? run + 1 : 0;
    if (run >= min_band) return Correlation::nonzero;
  }
  return Correlation::zero;
}

CorrelationMatrix reference_table() {
  CorrelationMatrix m{};
  for (auto& row : m) row.fill(Correlation::zero);
  for (Setup s : kAllSetups) m[setup_index(s)][setup_index(s)] = Correlation::nonzero;
  m[setup_index(Setup::N)][setup_index(Setup::Y)] = Correlation::nonzero;
  m[setup_index(Setup::Y)][setup_index(Setup::N)] = Correlation::nonzero;
  return m;
}

void write_correlators_csv(const std::filesystem::path& path, const std::vector<CorrelatorSeries>& series) {
  CsvTable table;
  table.header = {"pair", "tau", "value", "stderr"};
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.tau.size(); ++k) {
      table.rows.push_back({s.label(), format_double(s.tau[k]), format_double(s.values[k]), format_double(s.std_error[k])});
    }
  }
  write_csv(path, table);
}

}  // namespace qsmooth
