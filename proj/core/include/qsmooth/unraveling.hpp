#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "qsmooth/dynamics.hpp"
#include "qsmooth/rng.hpp"
#include "qsmooth/states.hpp"

namespace qsmooth {

/// Per-step outcomes of one channel. For N the values are 0 or 1; for X/Y
/// they are the homodyne increments dJ.
struct MeasurementRecord {
  Setup setup = Setup::N;
  double dt = 0.0;
  std::vector<double> outcomes;

  std::size_t steps() const { return outcomes.size(); }
};

/// Throws DomainError if `record` does not fit `p` (dt, length, N outcomes binary).
void check_record(const MeasurementRecord& record, const ModelParams& p);

/// Joint pure-state trajectory with its two records. `kets[i]` is the state
/// after `i * stride` steps.
struct TrueTrajectory {
  std::vector<Ket> kets;
  std::size_t stride = 1;
  MeasurementRecord record_O;
  MeasurementRecord record_V;
  std::uint64_t seed = 0;

  QubitState state(std::size_t i) const { return QubitState::from_ket(kets[i]); }
};

/// Stateless helpers on normalised kets, shared by the generator and the
/// hypothetical-record sampler.
class ChannelKernel {
 public:
  ChannelKernel(Setup setup, const ModelParams& p);

  Setup setup() const { return setup_; }

  /// Probability of a click within one step, dt |c psi|^2.
  double click_probability(const Ket& psi) const;
  /// <c + c^dag>.
  double homodyne_mean(const Ket& psi) const;
  /// Draws an outcome from the exact model distribution: Bernoulli for N,
  /// density Normal(0, dt) |(A + x c) psi|^2 for X/Y.
  double sample_outcome(const Ket& psi, Engine& rng) const;
  /// Applies the channel operator for `outcome`; returns |K psi|^2 before
  /// normalising psi in place. A zero return leaves psi untouched.
  double apply(Ket& psi, double outcome) const;

 private:
  double sample_homodyne(const Ket& psi, Engine& rng) const;

  Setup setup_;
  double dt_;
  double keep_;  // sqrt(1 - dt gamma / 2)
  Complex coupling_;  // sqrt(gamma / 2) exp(-i Phi)
};

/// Joint (observed, valid unobserved) trajectory drawn with the true
/// statistics. Each step applies exp(-iH dt), samples and applies the
/// observed outcome, then the unobserved one. `rho0` must be pure.
/// Throws IntegrationError if the state degenerates.
TrueTrajectory generate_true_trajectory(Setup observed, Setup valid, const QubitState& rho0, const ModelParams& p,
                                        Engine& rng, std::size_t stride = 1);

/// Leading eigenvector of a (nearly) pure state. Throws DomainError when
/// purity < 1 - tol.
Ket pure_ket(const QubitState& rho, double tol = 1e-9);

/// CSV dump: step, t, outcome_O, outcome_V, x_T, y_T, z_T (rows on the
/// trajectory's stride).
void write_trajectory_csv(const std::filesystem::path& path, const TrueTrajectory& traj, const ModelParams& p);

}  // namespace qsmooth
