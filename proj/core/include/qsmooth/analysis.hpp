#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qsmooth/correlation.hpp"
#include "qsmooth/dynamics.hpp"
#include "qsmooth/states.hpp"

namespace qsmooth {

/// Observed setup, actual unobserved setup, and the setup assumed by the smoother.
struct Combo {
  Setup observed = Setup::N;
  Setup valid = Setup::N;
  Setup assumed = Setup::N;

  bool is_valid_smoothing() const { return valid == assumed; }
  /// "dOdVdW", e.g. "dYdXdY".
  std::string label() const;
  /// Accepts "dYdXdY" or "YXY" (case-insensitive). Throws DomainError.
  static Combo parse(std::string_view text);
  /// All 27 combos, ordered by (observed, valid, assumed) over N, X, Y.
  static std::vector<Combo> all();

  friend bool operator==(const Combo&, const Combo&) = default;
};

/// Bloch vectors indexed by [record][time].
class StateTable {
 public:
  StateTable() = default;
  StateTable(std::size_t records, std::size_t times) : records_(records), times_(times), data_(records * times) {}

  std::size_t records() const { return records_; }
  std::size_t times() const { return times_; }
  BlochVector& at(std::size_t record, std::size_t time) { return data_[record * times_ + time]; }
  const BlochVector& at(std::size_t record, std::size_t time) const { return data_[record * times_ + time]; }

 private:
  std::size_t records_ = 0;
  std::size_t times_ = 0;
  std::vector<BlochVector> data_;
};

/// Nonparametric bootstrap over records. Every statistic evaluated with the
/// same plan uses the same resampled index sets, so paired differences are
/// handled consistently.
class BootstrapPlan {
 public:
  BootstrapPlan(std::size_t records, std::size_t resamples, std::uint64_t seed);

  std::size_t records() const { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t resamples() const { return static_cast<std::size_t>(weights_.cols()); }

  /// Resampled column means of `per_record` (records x k); result is resamples x k.
  Eigen::MatrixXd resampled_means(const Eigen::MatrixXd& per_record) const;
  /// Bootstrap standard error of each column mean.
  Eigen::VectorXd standard_errors(const Eigen::MatrixXd& per_record) const;

 private:
  Eigen::MatrixXd weights_;  // records x resamples, multiplicity / records
};

/// Sample standard deviation of each column.
Eigen::VectorXd column_sd(const Eigen::MatrixXd& m);

/// Per-record, per-time contributions (records x times) to the powers of one
/// smoothed ensemble. `smoothed_valid` is the dU = dV ensemble on the same records.
struct PowerSamples {
  Eigen::MatrixXd trsd;           // S[rho_F, rho_T] - S[rho_S, rho_T]
  Eigen::MatrixXd fidelity;       // F[rho_S, rho_T] - F[rho_F, rho_T]
  Eigen::MatrixXd purity;         // P[rho_S] - P[rho_F]
  Eigen::MatrixXd delta_sq;       // Tr[delta_U^2]
  Eigen::MatrixXd delta_cross;    // Tr[delta_U delta_V]
  Eigen::MatrixXd delta_valid_sq; // Tr[delta_V^2]
};

PowerSamples power_samples(const StateTable& truth, const StateTable& filtered, const StateTable& smoothed,
                           const StateTable& smoothed_valid);

/// delta rho = rho_S - rho_F, as a traceless matrix per time.
std::vector<Matrix2> delta_rho(const std::vector<QubitState>& smoothed, const std::vector<QubitState>& filtered);

/// Smoothing powers against time with bootstrap standard errors.
struct PowerSeries {
  Combo combo;
  std::size_t n_records = 0;
  std::vector<double> t;
  std::vector<double> R_S, R_S_err;
  std::vector<double> R_F, R_F_err;
  std::vector<double> R_P, R_P_err;
  /// delta-rho forms: E Tr[delta_U delta_V] and E Tr[delta_U^2].
  std::vector<double> R_F_delta, R_P_delta;
  std::vector<double> alpha;  // NaN where undefined
  std::vector<double> ess_mean;
};

PowerSeries smoothing_powers(const Combo& combo, const std::vector<double>& t, const PowerSamples& samples,
                             const BootstrapPlan& plan, const std::vector<double>& ess_mean = {});

/// alpha(t) = E Tr[dW dV] / sqrt(E Tr[dW^2] E Tr[dV^2]).
struct AlphaSeries {
  std::vector<double> t;
  std::vector<double> alpha;  // NaN where a purity power is not positive
  double time_average = 0.0;  // of alpha over the window
  double alpha_sq_average = 0.0;  // of alpha^2 over the window
  double alpha_sq_err = 0.0;
};

AlphaSeries alpha_coefficient(const std::vector<double>& t, const PowerSamples& samples,
                              const std::vector<std::size_t>& window, const BootstrapPlan& plan);

/// Indices of t inside [lo, hi].
std::vector<std::size_t> window_indices(const std::vector<double>& t, double lo, double hi);

struct Estimate {
  double mean = 0.0;
  double err = 0.0;
};

/// Window averages of one combo, plus paired comparisons with its valid combo.
struct WindowSummary {
  Combo combo;
  Estimate R_S, R_F, R_P;
  Estimate delta_sq, delta_cross, delta_valid_sq;
  /// alpha from the window-averaged delta moments.
  Estimate alpha;
  /// Window mean of alpha(t)^2.
  Estimate alpha_sq;
  /// Paired: R^{dU} - R^{dV}.
  Estimate R_S_minus_valid, R_F_minus_valid;
  /// delta-rho forms of the same quantities, with rho_T replaced by its
  /// conditional mean rho_S^{dV}: R_S = E Tr[2 dU dV - dU^2], R_F^{dU} - R_F^{dV} = E Tr[dU dV - dV^2].
  Estimate R_S_delta, R_S_delta_minus_valid, R_F_delta_minus_valid;
  /// Valid-smoothing equality: max over window times of |R_S - R_F| / se and |R_F - R_P| / se.
  double max_z_SF = 0.0;
  double max_z_FP = 0.0;
  double ess_mean = 0.0;
};

WindowSummary window_summary(const Combo& combo, const PowerSamples& samples, const PowerSamples& valid_samples,
                             const std::vector<std::size_t>& window, const BootstrapPlan& plan,
                             const std::vector<double>& ess_mean = {});

struct StrangeVerdict {
  Combo combo;
  double ratio = 0.0;  // E Tr[dV^2] / E Tr[dW^2]
  double bound = 0.0;  // min(alpha^2, 1 / (4 alpha^2))
  bool condition = false;           // (a) ratio < bound
  bool trsd_negative = false;       // R_S^{dW} < 0
  bool fidelity_exceeds = false;    // R_F^{dW} > R_F^{dV}
  bool strange = false;             // (b) both
  // Significance at 2 s.e. of the delta-rho estimates of the same two quantities.
  bool trsd_negative_2se = false;
  bool fidelity_exceeds_2se = false;
  bool consistent = false;          // (c) (a) == (b), or the deciding margin is within 2 s.e.
  bool quarter = false;             // (d) ratio <= 1/4
};

StrangeVerdict strange_regime_check(const WindowSummary& wrong, const WindowSummary& valid);

enum class Conjecture { none, C1, C2, C3, C4 };
std::string conjecture_name(Conjecture c);
/// C1: C[dO,dV] zero, C[dO,dW] zero; C2: zero, nonzero; C3: nonzero, zero; C4: both nonzero.
/// Valid-smoothing combos have no conjecture.
Conjecture conjecture_label(const Combo& combo, const CorrelationMatrix& table);

/// Power comparisons use the delta-rho (Rao-Blackwellised) window estimates;
/// the optimality flag uses the direct TrSD estimate against the true states.
struct ConjectureThresholds {
  double small = 0.25;  // fraction of the largest valid window power
  double large = 0.50;
  double similar = 0.50;  // C4: |R^{dW} - R^{dV}| <= similar * |R^{dV}|
  double significance = 2.0;
};

struct ConjectureCheck {
  Combo combo;
  Conjecture label = Conjecture::none;
  double reference_power = 0.0;  // largest valid window power (per measure)
  bool small_valid = false, small_wrong = false;
  bool large_valid = false, large_wrong = false;
  bool similar = false;
  bool wrong_below_valid = false;  // significant at the configured level
  bool optimal = false;            // R_S^{dW} <= R_S^{dV} within the significance level
  bool pass = false;
  std::string detail;
};

/// `summaries` must hold every combo to be judged and the valid combos of
/// their (dO, dV) pairs.
std::vector<ConjectureCheck> conjecture_report(const std::vector<WindowSummary>& summaries,
                                               const CorrelationMatrix& table,
                                               const ConjectureThresholds& thresholds = {});

}  // namespace qsmooth
