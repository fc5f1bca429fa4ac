#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qsmooth/analysis.hpp"
#include "qsmooth/correlation.hpp"
#include "qsmooth/dynamics.hpp"
#include "qsmooth/smoothing.hpp"

namespace qsmooth {

std::string library_version();

struct ExperimentConfig {
  double gamma = 1.0;
  double omega_over_gamma = 5.0;
  double dt = 1e-3;
  double t_total = 8.0;
  std::size_t n_true_trajectories = 300;
  std::size_t n_hypothetical = 1000;
  std::array<double, 2> ss_window{4.5, 6.0};
  std::uint64_t master_seed = 20240611;
  std::vector<Combo> combos = Combo::all();
  std::filesystem::path output_dir = "qsmooth-out";
  /// Initial Bloch vector of every true trajectory (must be pure).
  BlochVector initial_state{0.0, 0.0, -1.0};
  std::size_t output_stride = 10;
  std::size_t bootstrap_resamples = 500;
  double resample_threshold = 0.5;
  SmoothingEstimator estimator = SmoothingEstimator::filter_anchored;
  unsigned threads = 0;  // 0: hardware concurrency
  /// Refuse to run above this many particle-steps; 0 disables the check.
  double budget_particle_steps = 0.0;
  std::size_t dump_trajectories = 0;
  bool correlators = true;
  CorrelatorOptions correlator;
  ConjectureThresholds thresholds;

  ModelParams params() const;
  QubitState initial() const;

  /// Parses a JSON document; unknown keys and ill-typed values raise
  /// ConfigError naming the key. Missing keys keep their defaults.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  std::string to_json() const;

  /// Throws ConfigError for the first violated invariant.
  void validate() const;
};

struct CostEstimate {
  std::size_t steps = 0;
  std::size_t smoothing_runs = 0;  // distinct (dO, dV, dU) ensembles computed
  double particle_steps = 0.0;     // n_true * n_hyp * steps summed over runs
  double per_combo = 0.0;
  double memory_bytes = 0.0;       // peak resident state tables
  double projected_seconds = 0.0;  // at a nominal 40 ns per particle-step, one thread
  std::string summary() const;
};

CostEstimate estimate(const ExperimentConfig& config);

/// Everything a sweep produces, kept in memory for callers such as the
/// acceptance suite.
struct ExperimentResult {
  std::vector<double> t;
  std::vector<PowerSeries> powers;
  std::vector<WindowSummary> summaries;
  std::vector<StrangeVerdict> strange;
  std::vector<ConjectureCheck> conjectures;
  std::vector<CorrelatorSeries> correlator_series;
  CorrelationMatrix classification{};
  bool have_classification = false;

  // Exact-identity and consistency diagnostics over every record and time.
  double max_identity_error = 0.0;      // |S - (P - 2F + 1)|, matrix forms
  double max_power_identity_error = 0.0;  // |R_S - (2 R_F - R_P)|
  double max_delta_trace = 0.0;
  double min_true_purity = 1.0;
  /// max |x| of filtered (and of dU in {N, Y} smoothed) states for dO in {N, Y}.
  double max_inplane_x = 0.0;
  /// dU = X smoothers with dO in {N, Y} have x = 0 only in expectation: the
  /// largest |record mean of the window-averaged x| / s.e. over those combos.
  double max_inplane_x_z = 0.0;
  std::size_t clamped = 0;
  std::size_t psd_repairs = 0;
  double wall_seconds = 0.0;

  const WindowSummary& summary(const Combo& c) const;
  const PowerSeries& power(const Combo& c) const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs the sweep and writes the artifact directory. Output files depend only
/// on the configuration and seed, never on the thread count.
ExperimentResult run(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Correlators for all nine ordered setup pairs and their classification.
std::vector<CorrelatorSeries> run_correlators(const ExperimentConfig& config, CorrelationMatrix* classification);

/// Column layout of powers_*.csv.
const std::vector<std::string>& powers_header();

}  // namespace qsmooth
