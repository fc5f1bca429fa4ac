#include "qsmooth/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qsmooth/errors.hpp"

namespace qsmooth {

Matrix2 BackwardEffect::unscaled(std::size_t j) const { return effects[j] * std::exp(log_scale[j]); }

BackwardEffect backward_effect(const MeasurementRecord& record_O, const ModelParams& p) {
  check_record(record_O, p);
  const std::size_t n = record_O.steps();
  const Matrix2 u = step_unitary(p);
  const Matrix2 a = no_jump_operator(p);
  const Matrix2 c_obs = lindblad_operator(record_O.setup, p);
  const Matrix2 c_unobs = lindblad_operator(Setup::N, p);
  const double sqdt = std::sqrt(p.dt);

  BackwardEffect out;
  out.effects.resize(n + 1);
  out.log_scale.resize(n + 1);
  out.effects[n] = 0.5 * Matrix2::Identity();
  out.log_scale[n] = std::log(2.0);
  for (std::size_t j = n; j-- > 0;) {
    const double o = record_O.outcomes[j];
    const Matrix2 k = record_O.setup == Setup::N ? (o == 1.0 ? Matrix2(sqdt * c_obs) : a) : Matrix2(a + o * c_obs);
    const Matrix2 m = k * u;
    const Matrix2& next = out.effects[j + 1];
    // Adjoint of rho -> U_avg(M rho M^dag).
    Matrix2 e = a * next * a + p.dt * (c_unobs.adjoint() * next * c_unobs);
    e = m.adjoint() * e * m;
    e = 0.5 * (e + e.adjoint()).eval();
    const double tr = e.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
      std::ostringstream os;
      os << "future record has zero likelihood from step " << j;
      throw InconsistentRecordError(os.str());
    }
    out.effects[j] = e / tr;
    out.log_scale[j] = out.log_scale[j + 1] + std::log(tr);
  }
  return out;
}

std::vector<std::size_t> output_grid(std::size_t steps, std::size_t stride) {
  if (stride == 0) throw DomainError("output stride must be positive");
  std::vector<std::size_t> grid;
  for (std::size_t j = 0; j <= steps; j += stride) grid.push_back(j);
  if (grid.back() != steps) grid.push_back(steps);
  return grid;
}

namespace {

std::vector<Ket> initial_particles(const QubitState& rho0, std::size_t n) {
  rho0.validate(1e-10);
  // Pure-state particles cannot represent a mixed start: weighting eigenstates
  // by the future record would refine the initial mixture itself.
  if (!is_pure(rho0, 1e-10)) throw DomainError("smoothing requires a pure initial state");
  return std::vector<Ket>(n, pure_ket(rho0, 1e-10));
}

// Fast exp for the small exponents of the homodyne importance ratio.
inline double exp_small(double x) {
  if (std::abs(x) > 0.05) return std::exp(x);
  return 1.0 + x * (1.0 + x * (0.5 + x * (1.0 / 6 + x * (1.0 / 24 + x * (1.0 / 120 + x * (1.0 / 720 + x / 5040))))));
}

}  // namespace

HypotheticalSampler::HypotheticalSampler(const MeasurementRecord& record_O, Setup assumed, std::size_t n,
                                         const QubitState& rho0, const ModelParams& p, Engine& rng,
                                         double resample_threshold, bool keep_records)
    : record_(record_O),
      assumed_(assumed),
      params_(p),
      rng_(rng),
      threshold_(resample_threshold),
      keep_records_(keep_records) {
  if (n == 0) throw DomainError("number of hypothetical records must be positive");
  check_record(record_O, p);
  unitary_ = step_unitary(p);
  const Matrix2 a = no_jump_operator(p);
  const Matrix2 c_obs = lindblad_operator(record_O.setup, p);
  click_op_ = std::sqrt(p.dt) * c_obs * unitary_;
  no_click_op_ = a * unitary_;
  homodyne_op_ = c_obs * unitary_;
  keep_ = std::sqrt(1.0 - p.channel_rate() * p.dt);
  coupling_ = std::sqrt(p.channel_rate()) * std::polar(1.0, -homodyne_phase(assumed));
  kets_ = initial_particles(rho0, n);
  weights_.assign(n, 1.0);
  if (keep_records_) records_.assign(n, std::vector<double>{});
}

double HypotheticalSampler::forward_ess() const {
  double s = 0.0, s2 = 0.0;
  for (double w : weights_) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

void HypotheticalSampler::advance() {
  if (step_ >= record_.steps()) throw DomainError("sampler advanced past the end of the record");
  const double o = record_.outcomes[step_];
  Matrix2 m;
  if (record_.setup == Setup::N) {
    m = (o == 1.0) ? click_op_ : no_click_op_;
  } else {
    m = no_click_op_ + o * homodyne_op_;
  }
  const Complex m00 = m(0, 0), m01 = m(0, 1), m10 = m(1, 0), m11 = m(1, 1);
  const double dt = params_.dt;
  const double sd = std::sqrt(dt);
  const double click_scale = dt * std::norm(coupling_);
  const Complex coupling = coupling_;
  const double keep = keep_;
  const bool jump = assumed_ == Setup::N;

  double sum = 0.0;
  double sum_sq = 0.0;
  const std::size_t n = kets_.size();
  for (std::size_t k = 0; k < n; ++k) {
    Ket& psi = kets_[k];
    double& w = weights_[k];
    if (w == 0.0) continue;
    const Complex e0 = psi(kExcited), g0 = psi(kGround);
    Complex e = m00 * e0 + m01 * g0;
    Complex g = m10 * e0 + m11 * g0;
    const double like = std::norm(e) + std::norm(g);
    if (!(like > 0.0)) {
      w = 0.0;
      if (keep_records_) records_[k].push_back(0.0);
      continue;
    }
    // e, g stay unnormalised until the end of the step (one square root).
    const double inv_like = 1.0 / like;
    w *= like;

    double u;
    double norm_sq;
    if (jump) {
      const double pe = std::norm(e);
      if (uniform01(rng_) < click_scale * pe * inv_like) {
        u = 1.0;
        g = coupling * e;
        e = 0.0;
        norm_sq = std::norm(g);
      } else {
        u = 0.0;
        e *= keep;
        norm_sq = like - click_scale * pe;
      }
    } else {
      const Complex ce = coupling * e;
      const double mean = 2.0 * (std::conj(g) * ce).real() * inv_like;
      u = mean * dt + sd * standard_normal(rng_);
      e *= keep;
      g += u * ce;
      norm_sq = std::norm(e) + std::norm(g);
      // Model density over proposal density Normal(mean dt, dt).
      w *= norm_sq * inv_like * exp_small(-mean * u + 0.5 * mean * mean * dt);
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    e *= inv;
    g *= inv;
    psi(kExcited) = e;
    psi(kGround) = g;
    if (keep_records_) records_[k].push_back(u);
    sum += w;
    sum_sq += w * w;
  }
  ++step_;
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    std::ostringstream os;
    os << "all hypothetical records have zero likelihood at step " << step_;
    throw DegenerateEnsembleError(os.str());
  }
  const double scale = static_cast<double>(n) / sum;
  for (double& w : weights_) w *= scale;
  if (threshold_ > 0.0 && sum * sum < threshold_ * static_cast<double>(n) * sum_sq) resample();
}

void HypotheticalSampler::resample() {
  // Systematic resampling; weights have mean one.
  const std::size_t n = kets_.size();
  scratch_kets_.resize(n);
  if (keep_records_) scratch_records_.resize(n);
  double target = uniform01(rng_);
  double cumulative = 0.0;
  std::size_t src = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (src + 1 < n && cumulative + weights_[src] <= target) {
      cumulative += weights_[src];
      ++src;
    }
    scratch_kets_[k] = kets_[src];
    if (keep_records_) scratch_records_[k] = records_[src];
    target += 1.0;
  }
  kets_.swap(scratch_kets_);
  if (keep_records_) records_.swap(scratch_records_);
  std::fill(weights_.begin(), weights_.end(), 1.0);
  ++resamples_;
}

namespace {

// Moves an anchored estimate that left the Bloch ball back along the segment
// towards the plain estimate (always a valid state) until it reaches the surface.
BlochVector pull_into_ball(const BlochVector& anchored, const BlochVector& plain, bool* clamped) {
  if (anchored.norm() <= 1.0) {
    *clamped = false;
    return anchored;
  }
  *clamped = true;
  const BlochVector d = anchored - plain;
  const double a = dot(d, d), b = dot(plain, d), c = dot(plain, plain) - 1.0;
  const double lambda = c >= 0.0 ? 0.0 : (-b + std::sqrt(std::max(0.0, b * b - a * c))) / a;
  return clamp_to_ball(plain + std::clamp(lambda, 0.0, 1.0) * d);
}

struct ParticleEstimate {
  QubitState state;
  double ess = 0.0;
  bool clamped = false;
};

// Forward weights may be arbitrary positive multiples of each other.
ParticleEstimate estimate_state(const std::vector<Ket>& kets, const std::vector<double>& forward, const Matrix2& effect,
                        const QubitState& filtered, SmoothingEstimator estimator) {
  double sum_f = 0.0, ee_f = 0.0;
  Complex ge_f = 0.0;
  double sum_w = 0.0, sum_w2 = 0.0, ee_w = 0.0;
  Complex ge_w = 0.0;
  const double e00 = effect(0, 0).real();
  const double e11 = effect(1, 1).real();
  const Complex e01 = effect(0, 1);
  for (std::size_t k = 0; k < kets.size(); ++k) {
    const double f = forward[k];
    if (f == 0.0) continue;
    const Complex e = kets[k](kExcited), g = kets[k](kGround);
    const double pe = std::norm(e);
    const Complex ge = g * std::conj(e);  // rho_{g e}
    // <psi|E|psi> = E_ee |e|^2 + E_gg |g|^2 + 2 Re(conj(e) E_eg g).
    const double lik = e00 * pe + e11 * std::norm(g) + 2.0 * (std::conj(e) * e01 * g).real();
    const double w = f * std::max(lik, 0.0);
    sum_f += f;
    ee_f += f * pe;
    ge_f += f * ge;
    sum_w += w;
    sum_w2 += w * w;
    ee_w += w * pe;
    ge_w += w * ge;
  }
  if (!(sum_w > 0.0) || !std::isfinite(sum_w)) {
    throw DegenerateEnsembleError("smoothing weights underflowed for every sample; increase the sample count");
  }
  // Bloch components of the weighted means.
  const BlochVector mean_w{2.0 * ge_w.real() / sum_w, 2.0 * ge_w.imag() / sum_w, 2.0 * ee_w / sum_w - 1.0};
  BlochVector b = clamp_to_ball(mean_w);
  ParticleEstimate out;
  if (estimator == SmoothingEstimator::filter_anchored) {
    const BlochVector mean_f{2.0 * ge_f.real() / sum_f, 2.0 * ge_f.imag() / sum_f, 2.0 * ee_f / sum_f - 1.0};
    b = pull_into_ball(state_to_bloch(filtered) + (mean_w - mean_f), b, &out.clamped);
  }
  out.state = bloch_to_state(b);
  out.ess = sum_w * sum_w / sum_w2;
  return out;
}

}  // namespace

SmoothingEnsemble sample_hypothetical_records(const MeasurementRecord& record_O, Setup dU, std::size_t n,
                                              const QubitState& rho0, const ModelParams& p, Engine& rng,
                                              const SmootherOptions& options, bool keep_records) {
  HypotheticalSampler sampler(record_O, dU, n, rho0, p, rng, options.resample_threshold, keep_records);
  SmoothingEnsemble ens;
  ens.assumed_setup = dU;
  ens.n_samples = n;
  ens.steps = output_grid(record_O.steps(), options.stride);
  auto snapshot = [&]() {
    ens.pure_states.push_back(sampler.particles());
    std::vector<double> lf(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = sampler.forward_weights()[k];
      lf[k] = w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
    }
    ens.log_forward.push_back(std::move(lf));
  };
  std::size_t next = 0;
  for (std::size_t j = 0; j <= record_O.steps(); ++j) {
    if (next < ens.steps.size() && ens.steps[next] == j) {
      snapshot();
      ++next;
    }
    if (j < record_O.steps()) sampler.advance();
  }
  if (keep_records) ens.records = sampler.records();
  return ens;
}

void attach_backward_effect(SmoothingEnsemble& ensemble, const BackwardEffect& effect) {
  ensemble.log_weights.clear();
  ensemble.ess.clear();
  for (std::size_t t = 0; t < ensemble.steps.size(); ++t) {
    const Matrix2& e = effect.effects.at(ensemble.steps[t]);
    const double scale = effect.log_scale.at(ensemble.steps[t]);
    std::vector<double> lw(ensemble.n_samples);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ensemble.n_samples; ++k) {
      const Ket& psi = ensemble.pure_states[t][k];
      const double lik = (psi.adjoint() * e * psi)(0, 0).real();
      lw[k] = ensemble.log_forward[t][k] + (lik > 0.0 ? std::log(lik) + scale : -std::numeric_limits<double>::infinity());
      mx = std::max(mx, lw[k]);
    }
    double s = 0.0, s2 = 0.0;
    for (double l : lw) {
      const double w = std::exp(l - mx);
      s += w;
      s2 += w * w;
    }
    ensemble.ess.push_back(s2 > 0.0 ? s * s / s2 : 0.0);
    ensemble.log_weights.push_back(std::move(lw));
  }
}

SmoothingResult ensemble_smoothed_states(const SmoothingEnsemble& ensemble, const std::vector<QubitState>& filtered,
                                         SmoothingEstimator estimator) {
  if (ensemble.log_weights.size() != ensemble.steps.size()) {
    throw DomainError("ensemble has no backward weights; call attach_backward_effect first");
  }
  SmoothingResult out;
  out.steps = ensemble.steps;
  for (std::size_t t = 0; t < ensemble.steps.size(); ++t) {
    const auto& lf = ensemble.log_forward[t];
    const auto& lw = ensemble.log_weights[t];
    const double mx = *std::max_element(lf.begin(), lf.end());
    std::vector<double> forward(lf.size());
    for (std::size_t k = 0; k < lf.size(); ++k) forward[k] = std::exp(lf[k] - mx);
    double sum_f = 0.0, ee_f = 0.0, sum_w = 0.0, sum_w2 = 0.0, ee_w = 0.0;
    Complex ge_f = 0.0, ge_w = 0.0;
    const double mw = *std::max_element(lw.begin(), lw.end());
    for (std::size_t k = 0; k < lf.size(); ++k) {
      const Ket& psi = ensemble.pure_states[t][k];
      const double pe = std::norm(psi(kExcited));
      const Complex ge = psi(kGround) * std::conj(psi(kExcited));
      const double f = forward[k];
      const double w = std::exp(lw[k] - mw);
      sum_f += f;
      ee_f += f * pe;
      ge_f += f * ge;
      sum_w += w;
      sum_w2 += w * w;
      ee_w += w * pe;
      ge_w += w * ge;
    }
    if (!(sum_w > 0.0)) throw DegenerateEnsembleError("smoothing weights vanished for every sample");
    const BlochVector mean_w{2.0 * ge_w.real() / sum_w, 2.0 * ge_w.imag() / sum_w, 2.0 * ee_w / sum_w - 1.0};
    BlochVector b = clamp_to_ball(mean_w);
    bool clamped = false;
    if (estimator == SmoothingEstimator::filter_anchored) {
      const BlochVector mean_f{2.0 * ge_f.real() / sum_f, 2.0 * ge_f.imag() / sum_f, 2.0 * ee_f / sum_f - 1.0};
      b = pull_into_ball(state_to_bloch(filtered.at(ensemble.steps[t])) + (mean_w - mean_f), b, &clamped);
    }
    out.clamped += clamped ? 1 : 0;
    out.states.push_back(bloch_to_state(b));
    out.ess.push_back(sum_w * sum_w / sum_w2);
  }
  return out;
}

SmoothingResult smooth(const MeasurementRecord& record_O, Setup dU, const FilterResult& filtered,
                       const BackwardEffect& effect, const QubitState& rho0, const ModelParams& p, Engine& rng,
                       const SmootherOptions& options) {
  const std::size_t n_steps = record_O.steps();
  if (filtered.states.size() != n_steps + 1 || effect.effects.size() != n_steps + 1) {
    throw DomainError("filter/effect length does not match the record");
  }
  HypotheticalSampler sampler(record_O, dU, options.n_samples, rho0, p, rng, options.resample_threshold);
  SmoothingResult out;
  out.steps = output_grid(n_steps, options.stride);
  out.states.reserve(out.steps.size());
  out.ess.reserve(out.steps.size());
  std::size_t next = 0;
  for (std::size_t j = 0; j <= n_steps; ++j) {
    if (next < out.steps.size() && out.steps[next] == j) {
      const ParticleEstimate est = estimate_state(sampler.particles(), sampler.forward_weights(), effect.effects[j],
                                          filtered.states[j], options.estimator);
      out.states.push_back(est.state);
      out.ess.push_back(est.ess);
      out.clamped += est.clamped ? 1 : 0;
      ++next;
    }
    if (j < n_steps) sampler.advance();
  }
  out.resamples = sampler.resamples();
  return out;
}

SmoothingResult smooth(const MeasurementRecord& record_O, Setup dU, std::size_t n, const QubitState& rho0,
                       const ModelParams& p, Engine& rng, SmootherOptions options) {
  options.n_samples = n;
  const FilterResult filtered = filter(record_O, rho0, p);
  const BackwardEffect effect = backward_effect(record_O, p);
  return smooth(record_O, dU, filtered, effect, rho0, p, rng, options);
}

}  // namespace qsmooth
