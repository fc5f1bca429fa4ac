#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qsmooth/dynamics.hpp"
#include "qsmooth/states.hpp"
#include "qsmooth/unraveling.hpp"

namespace qsmooth {

/// Exhaustive reference for smoothing with a photon-counting unobserved
/// channel: every one of the 2^steps unobserved records is enumerated with
/// density-matrix arithmetic only (no sampling, no effect operators).
/// Unobserved records are indexed by bit masks, bit j holding u_j.
class EnumerationOracle {
 public:
  static constexpr std::size_t kMaxSteps = 16;

  /// Throws DomainError for more than kMaxSteps steps or a record/params mismatch.
  EnumerationOracle(const MeasurementRecord& record_O, const QubitState& rho0, const ModelParams& p);

  std::size_t steps() const { return steps_; }
  std::uint32_t record_count() const { return static_cast<std::uint32_t>(joint_.size()); }

  /// p(<->O, <->U) relative to the ostensible measure of the observed outcomes.
  double joint_probability(std::uint32_t record) const { return joint_[record]; }
  /// p(<->U | <->O).
  double posterior_probability(std::uint32_t record) const { return joint_[record] / total_; }
  /// Probability of drawing `record` by imposing o_t and then sampling u_t
  /// from its conditional distribution, step by step (no forward weights).
  double proposal_probability(std::uint32_t record) const;
  /// p(o_j, ..., o_{n-1} | u_0..u_{j-1}, o_0..o_{j-1}); only bits below j are used.
  double future_likelihood(std::uint32_t prefix, std::size_t j) const;
  /// Normalised state conditioned on o_0..o_{j-1} and the first j bits of `prefix`.
  QubitState conditioned_state(std::uint32_t prefix, std::size_t j) const;

  /// Exact smoothed state at every step 0..steps.
  const std::vector<QubitState>& smoothed() const { return smoothed_; }
  /// Exact filtered state at every step, by marginalising the enumeration.
  const std::vector<QubitState>& filtered() const { return filtered_; }

 private:
  Matrix2 unnormalised(std::uint32_t prefix, std::size_t j) const;

  MeasurementRecord record_;
  QubitState rho0_;
  ModelParams params_;
  std::size_t steps_ = 0;
  std::vector<double> joint_;
  double total_ = 0.0;
  std::vector<QubitState> smoothed_;
  std::vector<QubitState> filtered_;
};

/// Smoothed states from exhaustive enumeration (dU = N only).
std::vector<QubitState> brute_force_smooth(const MeasurementRecord& record_O, const QubitState& rho0,
                                           const ModelParams& p);

}  // namespace qsmooth
