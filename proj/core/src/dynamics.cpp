#include "qsmooth/dynamics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qsmooth/errors.hpp"

namespace qsmooth {

char setup_letter(Setup s) {
  switch (s) {
    case Setup::N: return 'N';
    case Setup::X: return 'X';
    case Setup::Y: return 'Y';
  }
  return '?';
}

std::string setup_label(Setup s) { return std::string("d") + setup_letter(s); }

Setup parse_setup(std::string_view text) {
  if (text.size() == 2 && (text[0] == 'd' || text[0] == 'D')) text.remove_prefix(1);
  if (text.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(text[0]))) {
      case 'N': return Setup::N;
      case 'X': return Setup::X;
      case 'Y': return Setup::Y;
      default: break;
    }
  }
  throw DomainError("unknown detector setup '" + std::string(text) + "'");
}

double homodyne_phase(Setup s) { return s == Setup::Y ? 0.5 * std::numbers::pi : 0.0; }

std::size_t ModelParams::steps() const {
  return static_cast<std::size_t>(std::llround((t_f - t_i) / dt));
}

void ModelParams::validate() const {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be non-negative");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!(t_f > t_i)) throw DomainError("t_f must exceed t_i");
  if (!(0.5 * gamma * dt <= 0.01)) {
    std::ostringstream os;
    os << "gamma*dt/2 = " << 0.5 * gamma * dt << " exceeds 0.01";
    throw DomainError(os.str());
  }
}

Matrix2 sigma_minus() {
  Matrix2 m = Matrix2::Zero();
  m(kGround, kExcited) = 1.0;
  return m;
}

Matrix2 sigma_x() {
  Matrix2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix2 sigma_y() {
  Matrix2 m;
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

Matrix2 sigma_z() {
  Matrix2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Matrix2 hamiltonian(const ModelParams& p) { return 0.5 * p.omega * sigma_x(); }

Matrix2 step_unitary(const ModelParams& p) {
  // exp(-i theta sigma_x) = cos(theta) 1 - i sin(theta) sigma_x.
  const double theta = 0.5 * p.omega * p.dt;
  return std::cos(theta) * Matrix2::Identity() - Complex(0.0, std::sin(theta)) * sigma_x();
}

Matrix2 lindblad_operator(Setup s, const ModelParams& p) {
  const double k = std::sqrt(p.channel_rate());
  return k * std::polar(1.0, -homodyne_phase(s)) * sigma_minus();
}

Matrix2 no_jump_operator(const ModelParams& p) {
  const double keep = 1.0 - p.channel_rate() * p.dt;
  if (keep < 0.0) throw DomainError("gamma*dt/2 exceeds 1; no valid Kraus decomposition");
  Matrix2 a = Matrix2::Identity();
  a(kExcited, kExcited) = std::sqrt(keep);
  return a;
}

Matrix2 measurement_operator(Setup s, double outcome, const ModelParams& p) {
  const Matrix2 c = lindblad_operator(s, p);
  if (s == Setup::N) {
    if (outcome == 0.0) return no_jump_operator(p);
    if (outcome == 1.0) return std::sqrt(p.dt) * c;
    std::ostringstream os;
    os << "photon-counting outcome must be 0 or 1, got " << outcome;
    throw DomainError(os.str());
  }
  if (!std::isfinite(outcome)) throw DomainError("homodyne outcome is not finite");
  return no_jump_operator(p) + outcome * c;
}

Matrix2 dissipator(const Matrix2& c, const Matrix2& rho) {
  const Matrix2 cdc = c.adjoint() * c;
  return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

Matrix2 lindblad_rhs(const Matrix2& rho, const ModelParams& p) {
  const Matrix2 h = hamiltonian(p);
  const Matrix2 c = lindblad_operator(Setup::N, p);
  const Complex minus_i(0.0, -1.0);
  return minus_i * (h * rho - rho * h) + 2.0 * dissipator(c, rho);
}

Eigen::Matrix4cd liouvillian(const ModelParams& p) {
  // Column k of the Liouvillian is the image of the k-th matrix unit.
  Eigen::Matrix4cd l;
  for (int k = 0; k < 4; ++k) {
    Matrix2 unit = Matrix2::Zero();
    unit(k % 2, k / 2) = 1.0;
    const Matrix2 image = lindblad_rhs(unit, p);
    for (int r = 0; r < 4; ++r) l(r, k) = image(r % 2, r / 2);
  }
  return l;
}

Matrix2 unobserved_average(const Matrix2& rho, const ModelParams& p) {
  const Matrix2 a = no_jump_operator(p);
  const Matrix2 c = lindblad_operator(Setup::N, p);
  return a * rho * a + p.dt * (c * rho * c.adjoint());
}

Matrix2 unobserved_average_adjoint(const Matrix2& effect, const ModelParams& p) {
  const Matrix2 a = no_jump_operator(p);
  const Matrix2 c = lindblad_operator(Setup::N, p);
  return a * effect * a + p.dt * (c.adjoint() * effect * c);
}

QubitState psd_repair(const Matrix2& rho, PsdRepairStats* stats) {
  Matrix2 h = 0.5 * (rho + rho.adjoint());
  const double tr = h.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw IntegrationError("state has non-positive or non-finite trace");
  h /= tr;
  const QubitState s(h);
  const double lo = min_eigenvalue(s);
  if (lo >= 0.0) return s;
  if (lo <= -1e-9) {
    std::ostringstream os;
    os << "PSD violation " << lo << " beyond repair threshold";
    throw IntegrationError(os.str());
  }
  // Clip: shrink the Bloch vector to the surface, which zeroes the negative
  // eigenvalue and keeps the eigenbasis.
  BlochVector b = state_to_bloch(h);
  b = (1.0 / b.norm()) * b;
  if (stats) {
    ++stats->repairs;
    stats->max_clipped = std::max(stats->max_clipped, -lo);
  }
  return bloch_to_state(b);
}

QubitState lindblad_step(const QubitState& rho, const ModelParams& p, PsdRepairStats* stats) {
  const Matrix2 u = step_unitary(p);
  Matrix2 next = u * rho.matrix() * u.adjoint();
  next = unobserved_average(next, p);  // observed channel, averaged
  next = unobserved_average(next, p);  // unobserved channel
  return psd_repair(next, stats);
}

QubitState steady_state(const ModelParams& p) {
  if (!(p.gamma > 0.0)) throw DomainError("steady_state requires gamma > 0");
  const Eigen::Matrix4cd l = liouvillian(p);
  Eigen::FullPivLU<Eigen::Matrix4cd> lu(l);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXcd kernel = lu.kernel();
  if (kernel.cols() != 1) {
    std::ostringstream os;
    os << "Liouvillian null space has dimension " << kernel.cols();
    throw IntegrationError(os.str());
  }
  Matrix2 rho;
  for (int r = 0; r < 4; ++r) rho(r % 2, r / 2) = kernel(r, 0);
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return QubitState(rho);
}

Matrix2 superop_G(const Matrix2& c, const Matrix2& rho) {
  const Matrix2 jumped = c * rho * c.adjoint();
  const double norm = jumped.trace().real();
  if (!(norm > 1e-14)) throw DomainError("dark-state jump: Tr[c rho c^dag] vanishes");
  return jumped / norm - rho;
}

Matrix2 superop_H(const Matrix2& c, const Matrix2& rho) {
  const Matrix2 s = c * rho + rho * c.adjoint();
  return s - s.trace() * rho;
}

Matrix2 kraus_step(const Matrix2& rho, Setup setup, double outcome, const ModelParams& p,
                   bool include_hamiltonian, bool include_other_channel) {
  Matrix2 next = rho;
  if (include_hamiltonian) {
    const Matrix2 u = step_unitary(p);
    next = u * next * u.adjoint();
  }
  const Matrix2 k = measurement_operator(setup, outcome, p);
  next = k * next * k.adjoint();
  if (include_other_channel) next = unobserved_average(next, p);
  return next;
}

}  // namespace qsmooth
