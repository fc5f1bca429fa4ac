#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qsmooth/dynamics.hpp"

namespace qsmooth {

struct CorrelatorOptions {
  double tau_max = 2.0;
  std::size_t n_tau = 41;
  std::size_t n_trajectories = 400;
  /// Length of each stationary run, in units of 1/gamma.
  double duration = 60.0;
  /// Discarded initial transient.
  double burn_in = 4.5;
  /// Classification: |value| / stderr >= threshold on >= min_band adjacent tau points.
  double threshold = 5.0;
  std::size_t min_band = 3;

  /// Throws DomainError when the grid or run lengths are inconsistent.
  void validate(const ModelParams& p) const;
};

/// Normalised two-time correlator C[dO, dU](tau) between the records of two
/// simultaneously monitored channels, estimated from block-averaged rates.
struct CorrelatorSeries {
  Setup observed = Setup::N;
  Setup unobserved = Setup::N;
  std::vector<double> tau;
  std::vector<double> values;
  std::vector<double> std_error;
  std::size_t n_trajectories = 0;
  /// sqrt(<dJ^2> / dt) of each record.
  double norm_O = 0.0;
  double norm_U = 0.0;

  std::string label() const { return setup_label(observed) + setup_label(unobserved); }
};

/// Records are generated from the steady state with the exact two-channel
/// statistics; trajectory i uses stream (seed, correlator, pair, i), so the
/// result does not depend on `threads`.
CorrelatorSeries two_time_correlator(Setup dO, Setup dU, const ModelParams& p, const CorrelatorOptions& options,
                                     std::uint64_t master_seed, unsigned threads = 1);

enum class Correlation { zero, nonzero };

/// Nonzero iff |value| / stderr >= threshold on a contiguous band of at least
/// `min_band` tau points. A point with zero stderr counts iff its value is nonzero.
Correlation classify_pair(const CorrelatorSeries& series, double threshold = 5.0, std::size_t min_band = 3);

/// Indexed by [setup(dO)][setup(dU)] in the order N, X, Y.
using CorrelationMatrix = std::array<std::array<Correlation, 3>, 3>;

/// The classification reported for resonance fluorescence with an x drive:
/// only dN-dY cross correlations and the autocorrelations are nonzero.
CorrelationMatrix reference_table();

inline std::size_t setup_index(Setup s) { return static_cast<std::size_t>(s); }

/// CSV (pair, tau, value, stderr).
void write_correlators_csv(const std::filesystem::path& path, const std::vector<CorrelatorSeries>& series);

}  // namespace qsmooth
