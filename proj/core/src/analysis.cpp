#include "qsmooth/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/random/uniform_int_distribution.hpp>

#include "qsmooth/errors.hpp"
#include "qsmooth/rng.hpp"

namespace qsmooth {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(cols[i]));
  return out;
}

Eigen::VectorXd window_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& window) {
  return select_columns(m, window).rowwise().mean();
}

Estimate estimate(const Eigen::VectorXd& per_record, const BootstrapPlan& plan) {
  Eigen::MatrixXd m = per_record;
  return {per_record.mean(), plan.standard_errors(m)(0)};
}

double alpha_from(double cross, double sq, double valid_sq) {
  if (!(sq > 0.0) || !(valid_sq > 0.0)) return kNaN;
  return cross / std::sqrt(sq * valid_sq);
}

double sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string Combo::label() const { return setup_label(observed) + setup_label(valid) + setup_label(assumed); }

Combo Combo::parse(std::string_view text) {
  std::string letters;
  for (char c : text) {
    if (c == 'd' || c == 'D') continue;
    letters.push_back(c);
  }
  if (letters.size() != 3) throw DomainError("combo '" + std::string(text) + "' is not of the form dOdVdW");
  return {parse_setup(letters.substr(0, 1)), parse_setup(letters.substr(1, 1)), parse_setup(letters.substr(2, 1))};
}

std::vector<Combo> Combo::all() {
  std::vector<Combo> out;
  for (Setup o : kAllSetups)
    for (Setup v : kAllSetups)
      for (Setup u : kAllSetups) out.push_back({o, v, u});
  return out;
}

BootstrapPlan::BootstrapPlan(std::size_t records, std::size_t resamples, std::uint64_t seed) {
  if (records == 0 || resamples < 2) throw DomainError("bootstrap needs records and at least two resamples");
  weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(records), static_cast<Eigen::Index>(resamples));
  Engine rng = make_stream(seed, StreamKind::bootstrap, {records, resamples});
  boost::random::uniform_int_distribution<std::size_t> pick(0, records - 1);
  const double unit = 1.0 / static_cast<double>(records);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < records; ++i) {
      weights_(static_cast<Eigen::Index>(pick(rng)), static_cast<Eigen::Index>(b)) += unit;
    }
  }
}

Eigen::MatrixXd BootstrapPlan::resampled_means(const Eigen::MatrixXd& per_record) const {
  if (per_record.rows() != weights_.rows()) throw DomainError("bootstrap plan and data disagree on record count");
  return weights_.transpose() * per_record;
}

Eigen::VectorXd BootstrapPlan::standard_errors(const Eigen::MatrixXd& per_record) const {
  return column_sd(resampled_means(per_record));
}

Eigen::VectorXd column_sd(const Eigen::MatrixXd& m) {
  const Eigen::RowVectorXd mean = m.colwise().mean();
  const Eigen::MatrixXd centered = m.rowwise() - mean;
  const double denom = std::max<double>(1.0, static_cast<double>(m.rows() - 1));
  return (centered.colwise().squaredNorm() / denom).array().sqrt().transpose();
}

PowerSamples power_samples(const StateTable& truth, const StateTable& filtered, const StateTable& smoothed,
                           const StateTable& smoothed_valid) {
  const std::size_t n = truth.records(), m = truth.times();
  for (const StateTable* s : {&filtered, &smoothed, &smoothed_valid}) {
    if (s->records() != n || s->times() != m) throw DomainError("state tables do not share records and time grid");
  }
  const auto rows = static_cast<Eigen::Index>(n), cols = static_cast<Eigen::Index>(m);
  PowerSamples out;
  for (Eigen::MatrixXd* x : {&out.trsd, &out.fidelity, &out.purity, &out.delta_sq, &out.delta_cross, &out.delta_valid_sq}) {
    x->resize(rows, cols);
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const BlochVector& bt = truth.at(r, i);
      const BlochVector& bf = filtered.at(r, i);
      const BlochVector& bs = smoothed.at(r, i);
      const BlochVector& bv = smoothed_valid.at(r, i);
      const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(i);
      out.trsd(ri, ci) = trsd(bf, bt) - trsd(bs, bt);
      out.fidelity(ri, ci) = fidelity(bs, bt) - fidelity(bf, bt);
      out.purity(ri, ci) = purity(bs) - purity(bf);
      const BlochVector du = bs - bf, dv = bv - bf;
      // Tr[A B] = (a . b) / 2 for traceless A = a . sigma / 2.
      out.delta_sq(ri, ci) = 0.5 * du.norm_squared();
      out.delta_cross(ri, ci) = 0.5 * dot(du, dv);
      out.delta_valid_sq(ri, ci) = 0.5 * dv.norm_squared();
    }
  }
  return out;
}

std::vector<Matrix2> delta_rho(const std::vector<QubitState>& smoothed, const std::vector<QubitState>& filtered) {
  if (smoothed.size() != filtered.size()) throw DomainError("smoothed and filtered series differ in length");
  std::vector<Matrix2> out;
  out.reserve(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i) out.push_back(smoothed[i].matrix() - filtered[i].matrix());
  return out;
}

PowerSeries smoothing_powers(const Combo& combo, const std::vector<double>& t, const PowerSamples& samples,
                             const BootstrapPlan& plan, const std::vector<double>& ess_mean) {
  if (static_cast<std::size_t>(samples.trsd.cols()) != t.size()) throw DomainError("time grid mismatch");
  PowerSeries out;
  out.combo = combo;
  out.n_records = static_cast<std::size_t>(samples.trsd.rows());
  out.t = t;
  out.R_S = to_vector(samples.trsd.colwise().mean().transpose());
  out.R_F = to_vector(samples.fidelity.colwise().mean().transpose());
  out.R_P = to_vector(samples.purity.colwise().mean().transpose());
  out.R_S_err = to_vector(plan.standard_errors(samples.trsd));
  out.R_F_err = to_vector(plan.standard_errors(samples.fidelity));
  out.R_P_err = to_vector(plan.standard_errors(samples.purity));
  out.R_P_delta = to_vector(samples.delta_sq.colwise().mean().transpose());
  out.R_F_delta = to_vector(samples.delta_cross.colwise().mean().transpose());
  const Eigen::VectorXd valid_sq = samples.delta_valid_sq.colwise().mean().transpose();
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.alpha.push_back(alpha_from(out.R_F_delta[i], out.R_P_delta[i], valid_sq(static_cast<Eigen::Index>(i))));
  }
  out.ess_mean = ess_mean.empty() ? std::vector<double>(t.size(), kNaN) : ess_mean;
  return out;
}

std::vector<std::size_t> window_indices(const std::vector<double>& t, double lo, double hi) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= lo - 1e-9 && t[i] <= hi + 1e-9) out.push_back(i);
  }
  if (out.empty()) throw DomainError("steady-state window contains no output times");
  return out;
}

AlphaSeries alpha_coefficient(const std::vector<double>& t, const PowerSamples& samples,
                              const std::vector<std::size_t>& window, const BootstrapPlan& plan) {
  AlphaSeries out;
  out.t = t;
  const Eigen::VectorXd cross = samples.delta_cross.colwise().mean().transpose();
  const Eigen::VectorXd sq = samples.delta_sq.colwise().mean().transpose();
  const Eigen::VectorXd vsq = samples.delta_valid_sq.colwise().mean().transpose();
  for (Eigen::Index i = 0; i < cross.size(); ++i) out.alpha.push_back(alpha_from(cross(i), sq(i), vsq(i)));

  double a = 0.0, a2 = 0.0;
  for (std::size_t i : window) {
    a += out.alpha[i];
    a2 += out.alpha[i] * out.alpha[i];
  }
  out.time_average = a / static_cast<double>(window.size());
  out.alpha_sq_average = a2 / static_cast<double>(window.size());

  const Eigen::MatrixXd bc = plan.resampled_means(select_columns(samples.delta_cross, window));
  const Eigen::MatrixXd bs = plan.resampled_means(select_columns(samples.delta_sq, window));
  const Eigen::MatrixXd bv = plan.resampled_means(select_columns(samples.delta_valid_sq, window));
  std::vector<double> boot;
  for (Eigen::Index b = 0; b < bc.rows(); ++b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < bc.cols(); ++i) {
      const double al = alpha_from(bc(b, i), bs(b, i), bv(b, i));
      s += al * al;
    }
    boot.push_back(s / static_cast<double>(bc.cols()));
  }
  out.alpha_sq_err = sd(boot);
  return out;
}

WindowSummary window_summary(const Combo& combo, const PowerSamples& samples, const PowerSamples& valid_samples,
                             const std::vector<std::size_t>& window, const BootstrapPlan& plan,
                             const std::vector<double>& ess_mean) {
  WindowSummary out;
  out.combo = combo;
  const Eigen::VectorXd s = window_rows(samples.trsd, window);
  const Eigen::VectorXd f = window_rows(samples.fidelity, window);
  out.R_S = estimate(s, plan);
  out.R_F = estimate(f, plan);
  out.R_P = estimate(window_rows(samples.purity, window), plan);
  const Eigen::VectorXd sq = window_rows(samples.delta_sq, window);
  const Eigen::VectorXd cross = window_rows(samples.delta_cross, window);
  const Eigen::VectorXd vsq = window_rows(samples.delta_valid_sq, window);
  out.delta_sq = estimate(sq, plan);
  out.delta_cross = estimate(cross, plan);
  out.delta_valid_sq = estimate(vsq, plan);

  Eigen::MatrixXd moments(sq.size(), 3);
  moments << cross, sq, vsq;
  const Eigen::MatrixXd boot = plan.resampled_means(moments);
  std::vector<double> boot_alpha;
  for (Eigen::Index b = 0; b < boot.rows(); ++b) boot_alpha.push_back(alpha_from(boot(b, 0), boot(b, 1), boot(b, 2)));
  out.alpha = {alpha_from(out.delta_cross.mean, out.delta_sq.mean, out.delta_valid_sq.mean), sd(boot_alpha)};

  const AlphaSeries series = alpha_coefficient(std::vector<double>(static_cast<std::size_t>(samples.trsd.cols())),
                                               samples, window, plan);
  out.alpha_sq = {series.alpha_sq_average, series.alpha_sq_err};

  out.R_S_delta = estimate(2.0 * cross - sq, plan);
  out.R_S_delta_minus_valid = estimate(2.0 * cross - sq - vsq, plan);
  out.R_F_delta_minus_valid = estimate(cross - vsq, plan);
  out.R_S_minus_valid = estimate(s - window_rows(valid_samples.trsd, window), plan);
  out.R_F_minus_valid = estimate(f - window_rows(valid_samples.fidelity, window), plan);

  const Eigen::MatrixXd sf = select_columns(samples.trsd - samples.fidelity, window);
  const Eigen::MatrixXd fp = select_columns(samples.fidelity - samples.purity, window);
  const Eigen::VectorXd sf_err = plan.standard_errors(sf), fp_err = plan.standard_errors(fp);
  const Eigen::VectorXd sf_mean = sf.colwise().mean().transpose(), fp_mean = fp.colwise().mean().transpose();
  for (Eigen::Index i = 0; i < sf_mean.size(); ++i) {
    out.max_z_SF = std::max(out.max_z_SF, sf_err(i) > 0.0 ? std::abs(sf_mean(i)) / sf_err(i) : 0.0);
    out.max_z_FP = std::max(out.max_z_FP, fp_err(i) > 0.0 ? std::abs(fp_mean(i)) / fp_err(i) : 0.0);
  }
  if (!ess_mean.empty()) {
    double e = 0.0;
    for (std::size_t i : window) e += ess_mean[i];
    out.ess_mean = e / static_cast<double>(window.size());
  }
  return out;
}

StrangeVerdict strange_regime_check(const WindowSummary& wrong, const WindowSummary& valid) {
  if (wrong.combo.observed != valid.combo.observed || wrong.combo.valid != valid.combo.valid ||
      !valid.combo.is_valid_smoothing()) {
    throw DomainError("strange_regime_check needs the valid combo of the same (dO, dV) pair");
  }
  StrangeVerdict v;
  v.combo = wrong.combo;
  const double a = wrong.delta_valid_sq.mean, b = wrong.delta_sq.mean;
  const double alpha = wrong.alpha.mean;
  v.ratio = b > 0.0 ? a / b : std::numeric_limits<double>::infinity();
  v.bound = (std::isfinite(alpha) && alpha > 0.0) ? std::min(alpha * alpha, 1.0 / (4.0 * alpha * alpha)) : 0.0;
  v.condition = v.ratio < v.bound;
  v.trsd_negative = wrong.R_S.mean < 0.0;
  v.fidelity_exceeds = wrong.R_F_minus_valid.mean > 0.0;
  v.strange = v.trsd_negative && v.fidelity_exceeds;
  v.trsd_negative_2se = wrong.R_S_delta.mean + 2.0 * wrong.R_S_delta.err < 0.0;
  v.fidelity_exceeds_2se = wrong.R_F_delta_minus_valid.mean - 2.0 * wrong.R_F_delta_minus_valid.err > 0.0;
  const bool trsd_unresolved = std::abs(wrong.R_S.mean) <= 2.0 * wrong.R_S.err;
  const bool fidelity_unresolved = std::abs(wrong.R_F_minus_valid.mean) <= 2.0 * wrong.R_F_minus_valid.err;
  v.consistent = v.condition == v.strange || trsd_unresolved || fidelity_unresolved;
  v.quarter = v.ratio <= 0.25;
  return v;
}

std::string conjecture_name(Conjecture c) {
  switch (c) {
    case Conjecture::C1: return "C1";
    case Conjecture::C2: return "C2";
    case Conjecture::C3: return "C3";
    case Conjecture::C4: return "C4";
    case Conjecture::none: break;
  }
  return "none";
}

Conjecture conjecture_label(const Combo& combo, const CorrelationMatrix& table) {
  if (combo.is_valid_smoothing()) return Conjecture::none;
  const bool cv = table[setup_index(combo.observed)][setup_index(combo.valid)] == Correlation::nonzero;
  const bool cw = table[setup_index(combo.observed)][setup_index(combo.assumed)] == Correlation::nonzero;
  if (!cv && !cw) return Conjecture::C1;
  if (!cv && cw) return Conjecture::C2;
  if (cv && !cw) return Conjecture::C3;
  return Conjecture::C4;
}

std::vector<ConjectureCheck> conjecture_report(const std::vector<WindowSummary>& summaries,
                                               const CorrelationMatrix& table,
                                               const ConjectureThresholds& th) {
  // delta-rho forms: valid power A = E Tr[dV^2]; wrong R_S = 2C - B, R_F = C.
  double ref = 0.0;
  for (const auto& s : summaries) {
    if (s.combo.is_valid_smoothing()) ref = std::max(ref, s.delta_sq.mean);
  }
  auto find_valid = [&](const Combo& c) -> const WindowSummary& {
    for (const auto& s : summaries) {
      if (s.combo == Combo{c.observed, c.valid, c.valid}) return s;
    }
    throw DomainError("conjecture report for " + c.label() + " needs its valid combo");
  };

  std::vector<ConjectureCheck> out;
  for (const auto& w : summaries) {
    if (w.combo.is_valid_smoothing()) continue;
    const WindowSummary& v = find_valid(w.combo);
    ConjectureCheck c;
    c.combo = w.combo;
    c.label = conjecture_label(w.combo, table);
    c.reference_power = ref;
    const double valid_power = v.delta_sq.mean;
    const double wrong_S = w.R_S_delta.mean, wrong_F = w.delta_cross.mean;
    c.small_valid = valid_power < th.small * ref;
    c.small_wrong = std::abs(wrong_S) < th.small * ref && std::abs(wrong_F) < th.small * ref;
    c.large_valid = valid_power >= th.large * ref;
    c.large_wrong = wrong_S >= th.large * ref && wrong_F >= th.large * ref;
    c.similar = std::abs(wrong_S - valid_power) <= th.similar * valid_power &&
                std::abs(wrong_F - valid_power) <= th.similar * valid_power;
    c.wrong_below_valid = w.R_S_delta_minus_valid.mean + th.significance * w.R_S_delta_minus_valid.err < 0.0 &&
                          w.R_F_delta_minus_valid.mean + th.significance * w.R_F_delta_minus_valid.err < 0.0;
    c.optimal = w.R_S_minus_valid.mean <= th.significance * w.R_S_minus_valid.err;
    std::ostringstream os;
    switch (c.label) {
      case Conjecture::C1:
        c.pass = c.small_valid && c.small_wrong;
        os << "both powers small";
        break;
      case Conjecture::C2:
        c.pass = c.optimal && c.small_valid;
        os << "valid small, R_S^dW <= R_S^dV";
        break;
      case Conjecture::C3:
        c.pass = c.wrong_below_valid;
        os << "R^dW < R^dV";
        break;
      case Conjecture::C4:
        c.pass = c.similar && c.large_valid && c.large_wrong;
        os << "R^dW within " << th.similar * 100 << "% of R^dV, both large";
        break;
      case Conjecture::none:
        break;
    }
    c.detail = os.str();
    out.push_back(c);
  }
  return out;
}

}  // namespace qsmooth
