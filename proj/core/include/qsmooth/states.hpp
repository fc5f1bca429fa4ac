#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qsmooth {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;
using Ket = Eigen::Vector2cd;

// Basis convention: index 0 is the excited state |e>, index 1 the ground
// state |g>, and sigma_minus |e> = |g>.
inline constexpr int kExcited = 0;
inline constexpr int kGround = 1;

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  double norm_squared() const { return x * x + y * y + z * z; }

  friend BlochVector operator-(const BlochVector& a, const BlochVector& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend BlochVector operator+(const BlochVector& a, const BlochVector& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend BlochVector operator*(double s, const BlochVector& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend double dot(const BlochVector& a, const BlochVector& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
  }
  friend bool operator==(const BlochVector&, const BlochVector&) = default;
};

/// Qubit density matrix. Construction does not validate; call `validate()`
/// where inputs cross a trust boundary.
class QubitState {
 public:
  QubitState();  // maximally mixed
  explicit QubitState(const Matrix2& matrix) : matrix_(matrix) {}

  static QubitState excited();
  static QubitState ground();
  static QubitState maximally_mixed();
  /// |psi><psi| / <psi|psi>.
  static QubitState from_ket(const Ket& psi);

  const Matrix2& matrix() const { return matrix_; }
  Complex operator()(int row, int col) const { return matrix_(row, col); }

  double trace() const { return matrix_.trace().real(); }
  /// Throws DomainError unless Hermitian and unit trace to `tol` and PSD to `psd_tol`.
  void validate(double tol = 1e-12, double psd_tol = 1e-9) const;

 private:
  Matrix2 matrix_;
};

/// rho = (1 + b . sigma) / 2. Throws DomainError if |b| > 1 + 1e-9.
QubitState bloch_to_state(const BlochVector& b);
BlochVector state_to_bloch(const QubitState& rho);
BlochVector state_to_bloch(const Matrix2& rho);
BlochVector ket_to_bloch(const Ket& psi);

double min_eigenvalue(const QubitState& rho);
bool is_pure(const QubitState& rho, double tol = 1e-9);

/// Tr[rho^2].
double purity(const QubitState& rho);
/// Trace square deviation Tr[(rho - sigma)^2].
double trsd(const QubitState& rho, const QubitState& sigma);
/// Tr[rho sigma]; equals the Jozsa fidelity when either argument is pure.
double fidelity(const QubitState& rho, const QubitState& sigma);

struct CheckedFidelity {
  double value = 0.0;
  bool jozsa = true;  // false when neither argument is pure
};
CheckedFidelity fidelity_checked(const QubitState& rho, const QubitState& sigma);

// Bloch-vector forms used by the ensemble reductions; identical to the matrix
// forms above up to rounding.
inline double purity(const BlochVector& b) { return 0.5 * (1.0 + b.norm_squared()); }
inline double trsd(const BlochVector& a, const BlochVector& b) { return 0.5 * (a - b).norm_squared(); }
inline double fidelity(const BlochVector& a, const BlochVector& b) { return 0.5 * (1.0 + dot(a, b)); }

/// Projects onto the Bloch ball (|b| <= 1); the TrSD-nearest valid state.
BlochVector clamp_to_ball(const BlochVector& b, bool* clamped = nullptr);

}  // namespace qsmooth
