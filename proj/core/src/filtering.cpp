#include "qsmooth/filtering.hpp"

#include <cmath>
#include <sstream>

#include "qsmooth/errors.hpp"

namespace qsmooth {

Matrix2 filter_step(const Matrix2& rho, Setup observed, double outcome, const ModelParams& p) {
  return kraus_step(rho, observed, outcome, p, /*include_hamiltonian=*/true, /*include_other_channel=*/true);
}

FilterResult filter(const MeasurementRecord& record_O, const QubitState& rho0, const ModelParams& p) {
  check_record(record_O, p);
  rho0.validate(1e-10);
  const std::size_t n = record_O.steps();

  // Operators are fixed per outcome; hoisted out of the loop.
  const Matrix2 u = step_unitary(p);
  const Matrix2 a = no_jump_operator(p);
  const Matrix2 c_unobs = lindblad_operator(Setup::N, p);
  const Matrix2 c_obs = lindblad_operator(record_O.setup, p);
  const double sqdt = std::sqrt(p.dt);

  FilterResult result;
  result.states.reserve(n + 1);
  result.states.push_back(rho0);
  Matrix2 rho = rho0.matrix();
  for (std::size_t j = 0; j < n; ++j) {
    const double o = record_O.outcomes[j];
    Matrix2 k;
    if (record_O.setup == Setup::N) {
      k = (o == 1.0) ? Matrix2(sqdt * c_obs) : a;
    } else {
      k = a + o * c_obs;
    }
    const Matrix2 m = k * u;
    Matrix2 next = m * rho * m.adjoint();
    next = a * next * a + p.dt * (c_unobs * next * c_unobs.adjoint());
    const double like = next.trace().real();
    if (!(like > 0.0) || !std::isfinite(like)) {
      std::ostringstream os;
      os << "observed outcome " << o << " at step " << j << " has zero likelihood";
      throw InconsistentRecordError(os.str());
    }
    result.log_likelihood += std::log(like);
    const QubitState repaired = psd_repair(next / like, &result.repairs);
    rho = repaired.matrix();
    result.states.push_back(repaired);
  }
  return result;
}

}  // namespace qsmooth
