#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qsmooth/states.hpp"

namespace qsmooth {

/// Detector attached to a fluorescence channel: photon counting or homodyne
/// with local-oscillator phase 0 (X) or pi/2 (Y).
enum class Setup { N, X, Y };

inline constexpr std::array<Setup, 3> kAllSetups{Setup::N, Setup::X, Setup::Y};

char setup_letter(Setup s);
/// "dN", "dX", "dY".
std::string setup_label(Setup s);
/// Accepts "N", "dN", "n", ... Throws DomainError otherwise.
Setup parse_setup(std::string_view text);
inline bool is_diffusive(Setup s) { return s != Setup::N; }
/// Local-oscillator phase; 0 for N (unused).
double homodyne_phase(Setup s);

struct ModelParams {
  double gamma = 1.0;  // total decay rate, 1/T_gamma
  double omega = 5.0;  // Rabi frequency
  double dt = 1e-3;
  double t_i = 0.0;
  double t_f = 8.0;

  std::size_t steps() const;
  double time(std::size_t step) const { return t_i + static_cast<double>(step) * dt; }
  /// Rate of each of the two channels, gamma / 2.
  double channel_rate() const { return 0.5 * gamma; }
  /// Checks dt > 0, gamma dt / 2 <= 0.01, t_f > t_i, gamma >= 0. Throws DomainError.
  void validate() const;
};

Matrix2 sigma_minus();
Matrix2 sigma_x();
Matrix2 sigma_y();
Matrix2 sigma_z();

/// H = (Omega / 2) sigma_x.
Matrix2 hamiltonian(const ModelParams& p);
/// exp(-i H dt).
Matrix2 step_unitary(const ModelParams& p);
/// c_N = sqrt(gamma/2) sigma_minus, c_Phi = c_N exp(-i Phi).
Matrix2 lindblad_operator(Setup s, const ModelParams& p);
/// A = sqrt(1 - dt c^dag c) = diag(sqrt(1 - gamma dt / 2), 1). Shared by every setup.
Matrix2 no_jump_operator(const ModelParams& p);
/// Channel measurement operator for one step (no Hamiltonian):
/// N: outcome 0 -> A, outcome 1 -> sqrt(dt) c;  X/Y: A + dJ c_Phi, with dJ
/// distributed ostensibly as Normal(0, dt). Throws DomainError for a
/// non-binary N outcome.
Matrix2 measurement_operator(Setup s, double outcome, const ModelParams& p);

/// D[c] rho = c rho c^dag - {c^dag c, rho} / 2.
Matrix2 dissipator(const Matrix2& c, const Matrix2& rho);
/// -i[H, rho] + D[c_o] rho + D[c_u] rho.
Matrix2 lindblad_rhs(const Matrix2& rho, const ModelParams& p);
/// Liouvillian acting on column-stacked vec(rho).
Eigen::Matrix4cd liouvillian(const ModelParams& p);

/// One unobserved-channel step averaged over outcomes: A rho A + dt c rho c^dag.
/// Identical for every setup.
Matrix2 unobserved_average(const Matrix2& rho, const ModelParams& p);
/// Heisenberg-picture adjoint of unobserved_average.
Matrix2 unobserved_average_adjoint(const Matrix2& effect, const ModelParams& p);

struct PsdRepairStats {
  std::size_t repairs = 0;
  double max_clipped = 0.0;  // largest |negative eigenvalue| clipped
};

/// Hermitises, renormalises the trace and clips a negative eigenvalue in
/// (-1e-9, 0). Larger violations throw IntegrationError.
QubitState psd_repair(const Matrix2& rho, PsdRepairStats* stats = nullptr);

/// One deterministic step of the two-channel master equation. Each step
/// applies exp(-iH dt) then the outcome-averaged map of each channel, which
/// is the Euler update to O(dt^2) and exactly trace preserving.
QubitState lindblad_step(const QubitState& rho, const ModelParams& p, PsdRepairStats* stats = nullptr);

/// Fixed point of the master equation from the null space of the Liouvillian.
QubitState steady_state(const ModelParams& p);

/// G[c] rho = c rho c^dag / Tr[c rho c^dag] - rho. Throws DomainError when
/// Tr[c rho c^dag] <= 1e-14 (jump out of a dark state).
Matrix2 superop_G(const Matrix2& c, const Matrix2& rho);
/// H[c] rho = c rho + rho c^dag - Tr[c rho + rho c^dag] rho.
Matrix2 superop_H(const Matrix2& c, const Matrix2& rho);

/// Unnormalised one-step update for a recorded outcome of `setup`:
///   [exp(-iH dt)] -> K_outcome . K_outcome^dag -> [unobserved average].
/// The trace of the result is the outcome likelihood (a probability for N, a
/// density relative to Normal(0, dt) for X/Y).
Matrix2 kraus_step(const Matrix2& rho, Setup setup, double outcome, const ModelParams& p,
                   bool include_hamiltonian = true, bool include_other_channel = false);

}  // namespace qsmooth
