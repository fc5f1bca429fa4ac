#pragma once

#include <cstddef>
#include <vector>

#include "qsmooth/dynamics.hpp"
#include "qsmooth/filtering.hpp"
#include "qsmooth/rng.hpp"
#include "qsmooth/states.hpp"
#include "qsmooth/unraveling.hpp"

namespace qsmooth {

/// Effect operators of the future observed record, with the unobserved
/// channel marginalised: Tr[E(t_j) rho] = p(o_j, ..., o_{n-1} | rho at t_j).
/// Stored at unit trace; the true effect is effects[j] * exp(log_scale[j]).
struct BackwardEffect {
  std::vector<Matrix2> effects;
  std::vector<double> log_scale;

  std::size_t steps() const { return effects.empty() ? 0 : effects.size() - 1; }
  /// Unscaled effect (may under/overflow for long records).
  Matrix2 unscaled(std::size_t j) const;
};

BackwardEffect backward_effect(const MeasurementRecord& record_O, const ModelParams& p);

enum class SmoothingEstimator {
  /// rho_F + (sum w rho / sum w - sum L rho / sum L): exact at t_f, lower variance.
  filter_anchored,
  /// sum w rho / sum w.
  plain,
};

struct SmootherOptions {
  std::size_t n_samples = 1000;
  /// Output grid spacing in steps; the final step is always included.
  std::size_t stride = 1;
  /// Resample (systematic) when the forward-weight ESS falls below
  /// threshold * n. Zero or negative disables resampling.
  double resample_threshold = 0.5;
  SmoothingEstimator estimator = SmoothingEstimator::filter_anchored;
};

/// Output grid 0, stride, 2 stride, ..., with `steps` appended if missed.
std::vector<std::size_t> output_grid(std::size_t steps, std::size_t stride);

/// Particle approximation of p(<-U | <-O) for an assumed unobserved setup.
/// Each particle is a pure joint state; its forward weight accumulates the
/// likelihood of the observed outcomes (and, for homodyne proposals, the
/// exact importance ratio). `rho0` must be pure (DomainError otherwise).
class HypotheticalSampler {
 public:
  HypotheticalSampler(const MeasurementRecord& record_O, Setup assumed, std::size_t n, const QubitState& rho0,
                      const ModelParams& p, Engine& rng, double resample_threshold, bool keep_records = false);

  std::size_t step() const { return step_; }
  std::size_t size() const { return kets_.size(); }
  const std::vector<Ket>& particles() const { return kets_; }
  /// Forward weights, rescaled to mean one after every step.
  const std::vector<double>& forward_weights() const { return weights_; }
  /// Unobserved outcomes of each particle's ancestry (only with keep_records).
  const std::vector<std::vector<double>>& records() const { return records_; }
  std::size_t resamples() const { return resamples_; }
  double forward_ess() const;

  /// Consumes the observed outcome of the current step.
  void advance();

 private:
  void resample();

  const MeasurementRecord& record_;
  Setup assumed_;
  ModelParams params_;
  Engine& rng_;
  double threshold_;
  bool keep_records_;
  std::size_t step_ = 0;
  std::size_t resamples_ = 0;

  Matrix2 unitary_;
  Matrix2 click_op_;     // observed operator for N outcome 1 (times U)
  Matrix2 no_click_op_;  // observed operator for N outcome 0 / homodyne constant part (times U)
  Matrix2 homodyne_op_;  // observed c_Phi U, scaled by dJ
  double keep_;
  Complex coupling_;
  std::vector<Ket> kets_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> records_;
  std::vector<Ket> scratch_kets_;
  std::vector<std::vector<double>> scratch_records_;
};

/// Snapshots of the particle system on an output grid.
struct SmoothingEnsemble {
  Setup assumed_setup = Setup::N;
  std::size_t n_samples = 0;
  std::vector<std::size_t> steps;
  std::vector<std::vector<Ket>> pure_states;         // [time][sample]
  std::vector<std::vector<double>> log_forward;      // [time][sample], log L up to a common constant
  std::vector<std::vector<double>> log_weights;      // log L + log Tr[E rho]; empty until attached
  std::vector<double> ess;                           // of the smoothing weights once attached
  /// Final unobserved records per sample (only when requested).
  std::vector<std::vector<double>> records;
};

/// Draws `n` hypothetical unobserved records of setup `dU` consistent with
/// `record_O`. Throws DomainError for n == 0, a mixed `rho0` or a record/params mismatch.
SmoothingEnsemble sample_hypothetical_records(const MeasurementRecord& record_O, Setup dU, std::size_t n,
                                              const QubitState& rho0, const ModelParams& p, Engine& rng,
                                              const SmootherOptions& options = {}, bool keep_records = false);

/// Fills log_weights and ess from a backward pass over the same record.
void attach_backward_effect(SmoothingEnsemble& ensemble, const BackwardEffect& effect);

struct SmoothingResult {
  std::vector<std::size_t> steps;
  std::vector<QubitState> states;
  std::vector<double> ess;
  std::size_t resamples = 0;
  std::size_t clamped = 0;
};

/// Smoothed states on the ensemble's grid. `filtered` holds the filtered
/// state at every step (needed by the filter-anchored estimator).
SmoothingResult ensemble_smoothed_states(const SmoothingEnsemble& ensemble, const std::vector<QubitState>& filtered,
                                         SmoothingEstimator estimator = SmoothingEstimator::filter_anchored);

/// Streaming smoother sharing a precomputed filter and backward effect.
SmoothingResult smooth(const MeasurementRecord& record_O, Setup dU, const FilterResult& filtered,
                       const BackwardEffect& effect, const QubitState& rho0, const ModelParams& p, Engine& rng,
                       const SmootherOptions& options);

/// Convenience form computing the filter and the backward effect itself.
SmoothingResult smooth(const MeasurementRecord& record_O, Setup dU, std::size_t n, const QubitState& rho0,
                       const ModelParams& p, Engine& rng, SmootherOptions options = {});

}  // namespace qsmooth
