#include "qsmooth/states.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsmooth/errors.hpp"

namespace qsmooth {

double BlochVector::norm() const { return std::sqrt(norm_squared()); }

QubitState::QubitState() : matrix_(0.5 * Matrix2::Identity()) {}

QubitState QubitState::excited() {
  Matrix2 m = Matrix2::Zero();
  m(kExcited, kExcited) = 1.0;
  return QubitState(m);
}

QubitState QubitState::ground() {
  Matrix2 m = Matrix2::Zero();
  m(kGround, kGround) = 1.0;
  return QubitState(m);
}

QubitState QubitState::maximally_mixed() { return QubitState(); }

QubitState QubitState::from_ket(const Ket& psi) {
  const double n = psi.squaredNorm();
  if (!(n > 0.0)) throw DomainError("from_ket: zero vector");
  return QubitState(psi * psi.adjoint() / n);
}

void QubitState::validate(double tol, double psd_tol) const {
  const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (!(herm <= tol)) {
    std::ostringstream os;
    os << "state is not Hermitian (max |rho - rho^dag| = " << herm << ")";
    throw DomainError(os.str());
  }
  const double tr = matrix_.trace().real();
  if (!(std::abs(tr - 1.0) <= tol)) {
    std::ostringstream os;
    os << "state trace " << tr << " differs from 1";
    throw DomainError(os.str());
  }
  const double lo = min_eigenvalue(*this);
  if (!(lo >= -psd_tol)) {
    std::ostringstream os;
    os << "state is not positive semidefinite (min eigenvalue " << lo << ")";
    throw DomainError(os.str());
  }
}

QubitState bloch_to_state(const BlochVector& b) {
  if (b.norm() > 1.0 + 1e-9) {
    std::ostringstream os;
    os << "Bloch vector norm " << b.norm() << " exceeds 1";
    throw DomainError(os.str());
  }
  Matrix2 m;
  m(0, 0) = 0.5 * (1.0 + b.z);
  m(1, 1) = 0.5 * (1.0 - b.z);
  m(0, 1) = Complex(0.5 * b.x, -0.5 * b.y);
  m(1, 0) = Complex(0.5 * b.x, 0.5 * b.y);
  return QubitState(m);
}

BlochVector state_to_bloch(const Matrix2& m) {
  // Tr[rho sigma_i] with sigma_x = [[0,1],[1,0]], sigma_y = [[0,-i],[i,0]].
  return {2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), (m(0, 0) - m(1, 1)).real()};
}

BlochVector state_to_bloch(const QubitState& rho) { return state_to_bloch(rho.matrix()); }

BlochVector ket_to_bloch(const Ket& psi) {
  const double n = psi.squaredNorm();
  const Complex ge = std::conj(psi(kExcited)) * psi(kGround);  // rho_{g e}
  return {2.0 * ge.real() / n, 2.0 * ge.imag() / n,
          (std::norm(psi(kExcited)) - std::norm(psi(kGround))) / n};
}

double min_eigenvalue(const QubitState& rho) {
  const Matrix2 h = 0.5 * (rho.matrix() + rho.matrix().adjoint());
  const double a = h(0, 0).real();
  const double d = h(1, 1).real();
  const double off = std::abs(h(0, 1));
  const double mean = 0.5 * (a + d);
  const double rad = std::sqrt(0.25 * (a - d) * (a - d) + off * off);
  return mean - rad;
}

bool is_pure(const QubitState& rho, double tol) { return purity(rho) >= 1.0 - tol; }

double purity(const QubitState& rho) {
  // Tr[rho^2] = sum_ij |rho_ij|^2 for Hermitian rho.
  return (rho.matrix() * rho.matrix()).trace().real();
}

double trsd(const QubitState& rho, const QubitState& sigma) {
  const Matrix2 d = rho.matrix() - sigma.matrix();
  return (d * d).trace().real();
}

double fidelity(const QubitState& rho, const QubitState& sigma) {
  return (rho.matrix() * sigma.matrix()).trace().real();
}

CheckedFidelity fidelity_checked(const QubitState& rho, const QubitState& sigma) {
  return {fidelity(rho, sigma), is_pure(rho) || is_pure(sigma)};
}

BlochVector clamp_to_ball(const BlochVector& b, bool* clamped) {
  const double n = b.norm();
  if (n <= 1.0) {
    if (clamped) *clamped = false;
    return b;
  }
  if (clamped) *clamped = true;
  return (1.0 / n) * b;
}

}  // namespace qsmooth
