#pragma once

#include <vector>

#include "qsmooth/dynamics.hpp"
#include "qsmooth/states.hpp"
#include "qsmooth/unraveling.hpp"

namespace qsmooth {

/// One-step filter map for a recorded observed outcome: exp(-iH dt), the
/// observed Kraus operator, then the unobserved channel averaged out.
/// Returns the unnormalised state; its trace is the outcome likelihood.
Matrix2 filter_step(const Matrix2& rho, Setup observed, double outcome, const ModelParams& p);

struct FilterResult {
  /// states[j] is conditioned on the first j outcomes (size steps + 1).
  std::vector<QubitState> states;
  /// Sum of log outcome likelihoods, log p(<-O) relative to the ostensible measure.
  double log_likelihood = 0.0;
  PsdRepairStats repairs;
};

/// Filtered state conditioned on the observed record only; independent of
/// any assumption about the unobserved detector. Throws
/// InconsistentRecordError on a zero-likelihood outcome.
FilterResult filter(const MeasurementRecord& record_O, const QubitState& rho0, const ModelParams& p);

}  // namespace qsmooth
