#include "qsmooth/unraveling.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qsmooth/errors.hpp"
#include "qsmooth/io.hpp"

namespace qsmooth {

void check_record(const MeasurementRecord& record, const ModelParams& p) {
  if (std::abs(record.dt - p.dt) > 1e-15 * std::max(1.0, p.dt)) {
    std::ostringstream os;
    os << "record dt " << record.dt << " does not match model dt " << p.dt;
    throw DomainError(os.str());
  }
  if (record.steps() != p.steps()) {
    std::ostringstream os;
    os << "record has " << record.steps() << " steps, model expects " << p.steps();
    throw DomainError(os.str());
  }
  if (record.setup == Setup::N) {
    for (double o : record.outcomes) {
      if (o != 0.0 && o != 1.0) throw DomainError("photon-counting record contains a non-binary outcome");
    }
  }
}

ChannelKernel::ChannelKernel(Setup setup, const ModelParams& p)
    : setup_(setup),
      dt_(p.dt),
      keep_(std::sqrt(1.0 - p.channel_rate() * p.dt)),
      coupling_(std::sqrt(p.channel_rate()) * std::polar(1.0, -homodyne_phase(setup))) {
  if (!(p.channel_rate() * p.dt <= 1.0)) throw DomainError("gamma*dt/2 exceeds 1");
}

double ChannelKernel::click_probability(const Ket& psi) const {
  return dt_ * std::norm(coupling_) * std::norm(psi(kExcited));
}

double ChannelKernel::homodyne_mean(const Ket& psi) const {
  // <psi| c |psi> = conj(g) * coupling * e; <c + c^dag> is twice its real part.
  return 2.0 * (std::conj(psi(kGround)) * coupling_ * psi(kExcited)).real();
}

double ChannelKernel::sample_outcome(const Ket& psi, Engine& rng) const {
  if (setup_ == Setup::N) return uniform01(rng) < click_probability(psi) ? 1.0 : 0.0;
  return sample_homodyne(psi, rng);
}

double ChannelKernel::sample_homodyne(const Ket& psi, Engine& rng) const {
  // Outcome density: phi(x) (alpha + 2 beta x + g2 x^2) with phi = Normal(0, dt)
  // and alpha + g2 dt = 1. Completing the square splits it into
  //   r phi(x) + g2 (x + s)^2 phi(x),  s = beta / g2,  r = alpha - beta^2 / g2.
  const double sd = std::sqrt(dt_);
  const double e2 = std::norm(psi(kExcited));
  const double g2 = std::norm(coupling_) * e2;
  if (g2 <= 1e-300) return sd * standard_normal(rng);
  const double alpha = keep_ * keep_ * e2 + std::norm(psi(kGround));
  const double beta = (std::conj(psi(kGround)) * coupling_ * psi(kExcited)).real();
  const double s = beta / g2;
  const double r = std::max(0.0, alpha - beta * s);
  if (uniform01(rng) < r) return sd * standard_normal(rng);
  // (x + s)^2 phi(x) by rejection from (x^2 + s^2) phi(x), acceptance >= 1/2.
  const double p_square = dt_ / (dt_ + s * s);
  for (;;) {
    double x;
    if (uniform01(rng) < p_square) {
      const double n1 = standard_normal(rng);
      const double n2 = standard_normal(rng);
      const double n3 = standard_normal(rng);
      x = sd * std::sqrt(n1 * n1 + n2 * n2 + n3 * n3);
      if (uniform01(rng) < 0.5) x = -x;
    } else {
      x = sd * standard_normal(rng);
    }
    const double num = (x + s) * (x + s);
    const double den = 2.0 * (x * x + s * s);
    if (uniform01(rng) * den < num) return x;
  }
}

double ChannelKernel::apply(Ket& psi, double outcome) const {
  Complex e = psi(kExcited);
  Complex g = psi(kGround);
  if (setup_ == Setup::N) {
    if (outcome == 1.0) {
      g = std::sqrt(dt_) * coupling_ * e;
      e = 0.0;
    } else {
      e *= keep_;
    }
  } else {
    g += outcome * coupling_ * e;
    e *= keep_;
  }
  const double n = std::norm(e) + std::norm(g);
  if (n > 0.0) {
    const double inv = 1.0 / std::sqrt(n);
    psi(kExcited) = e * inv;
    psi(kGround) = g * inv;
  }
  return n;
}

Ket pure_ket(const QubitState& rho, double tol) {
  if (!is_pure(rho, tol)) throw DomainError("initial state must be pure");
  Eigen::SelfAdjointEigenSolver<Matrix2> eig(rho.matrix());
  Ket v = eig.eigenvectors().col(1);
  return v / v.norm();
}

TrueTrajectory generate_true_trajectory(Setup observed, Setup valid, const QubitState& rho0, const ModelParams& p,
                                        Engine& rng, std::size_t stride) {
  if (stride == 0) throw DomainError("stride must be positive");
  const std::size_t n = p.steps();
  const ChannelKernel obs(observed, p);
  const ChannelKernel unobs(valid, p);
  const Matrix2 u = step_unitary(p);

  TrueTrajectory traj;
  traj.stride = stride;
  traj.record_O = {observed, p.dt, std::vector<double>(n)};
  traj.record_V = {valid, p.dt, std::vector<double>(n)};
  traj.kets.reserve(n / stride + 1);

  Ket psi = pure_ket(rho0);
  traj.kets.push_back(psi);
  for (std::size_t j = 0; j < n; ++j) {
    psi = u * psi;
    const double o = obs.sample_outcome(psi, rng);
    const double lo = obs.apply(psi, o);
    const double v = unobs.sample_outcome(psi, rng);
    const double lv = unobs.apply(psi, v);
    if (!(lo > 0.0) || !(lv > 0.0) || !std::isfinite(lo * lv)) {
      std::ostringstream os;
      os << "true trajectory degenerated at step " << j;
      throw IntegrationError(os.str());
    }
    traj.record_O.outcomes[j] = o;
    traj.record_V.outcomes[j] = v;
    if ((j + 1) % stride == 0) traj.kets.push_back(psi);
  }
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrueTrajectory& traj, const ModelParams& p) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  out << "step,t,outcome_O,outcome_V,x_T,y_T,z_T\n";
  for (std::size_t i = 0; i < traj.kets.size(); ++i) {
    const std::size_t step = i * traj.stride;
    const BlochVector b = ket_to_bloch(traj.kets[i]);
    // Outcome columns hold the increment of the step that ends here; empty at step 0.
    out << step << ',' << format_double(p.time(step)) << ',';
    if (step > 0) {
      out << format_double(traj.record_O.outcomes[step - 1]) << ','
          << format_double(traj.record_V.outcomes[step - 1]) << ',';
    } else {
      out << ",,";
    }
    out << format_double(b.x) << ',' << format_double(b.y) << ',' << format_double(b.z) << '\n';
  }
}

}  // namespace qsmooth
