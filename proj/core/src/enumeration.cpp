#include "qsmooth/enumeration.hpp"

#include <sstream>

#include "qsmooth/errors.hpp"

namespace qsmooth {

namespace {

// One full step for outcomes (o, u): exp(-iH dt), observed operator, unobserved operator.
Matrix2 joint_step(const Matrix2& rho, Setup observed, double o, double u, const ModelParams& p) {
  const Matrix2 rotated = kraus_step(rho, observed, o, p, /*include_hamiltonian=*/true, false);
  return kraus_step(rotated, Setup::N, u, p, /*include_hamiltonian=*/false, false);
}

double bit(std::uint32_t mask, std::size_t j) { return ((mask >> j) & 1u) ? 1.0 : 0.0; }

}  // namespace

EnumerationOracle::EnumerationOracle(const MeasurementRecord& record_O, const QubitState& rho0, const ModelParams& p)
    : record_(record_O), rho0_(rho0), params_(p), steps_(record_O.steps()) {
  if (steps_ > kMaxSteps) {
    std::ostringstream os;
    os << "enumeration limited to " << kMaxSteps << " steps, record has " << steps_;
    throw DomainError(os.str());
  }
  check_record(record_O, p);
  rho0.validate(1e-10);

  const std::uint32_t count = 1u << steps_;
  joint_.assign(count, 0.0);
  std::vector<Matrix2> smooth_acc(steps_ + 1, Matrix2::Zero());
  std::vector<Matrix2> filter_acc(steps_ + 1, Matrix2::Zero());

  // Depth-first over records; path[j] is the unnormalised state after j steps.
  std::vector<Matrix2> path(steps_ + 1);
  path[0] = rho0.matrix();
  for (std::uint32_t r = 0; r < count; ++r) {
    // Recompute only the suffix that changed since r - 1.
    std::size_t from = 0;
    if (r > 0) {
      const std::uint32_t changed = r ^ (r - 1);
      while (from < steps_ && !((changed >> from) & 1u)) ++from;
    }
    for (std::size_t j = from; j < steps_; ++j) {
      path[j + 1] = joint_step(path[j], record_O.setup, record_O.outcomes[j], bit(r, j), p);
    }
    const double w = path[steps_].trace().real();
    joint_[r] = w;
    if (w <= 0.0) continue;
    for (std::size_t j = 0; j <= steps_; ++j) {
      const double tr = path[j].trace().real();
      smooth_acc[j] += (w / tr) * path[j];
    }
  }
  // Filtered state: sum over prefixes of the unnormalised prefix states.
  for (std::size_t j = 0; j <= steps_; ++j) {
    const std::uint32_t prefixes = 1u << j;
    for (std::uint32_t r = 0; r < prefixes; ++r) filter_acc[j] += unnormalised(r, j);
  }

  total_ = 0.0;
  for (double w : joint_) total_ += w;
  if (!(total_ > 0.0)) throw InconsistentRecordError("observed record has zero probability");
  for (std::size_t j = 0; j <= steps_; ++j) {
    smoothed_.emplace_back(Matrix2(smooth_acc[j] / total_));
    filtered_.emplace_back(Matrix2(filter_acc[j] / filter_acc[j].trace().real()));
  }
}

Matrix2 EnumerationOracle::unnormalised(std::uint32_t prefix, std::size_t j) const {
  Matrix2 rho = rho0_.matrix();
  for (std::size_t s = 0; s < j; ++s) rho = joint_step(rho, record_.setup, record_.outcomes[s], bit(prefix, s), params_);
  return rho;
}

QubitState EnumerationOracle::conditioned_state(std::uint32_t prefix, std::size_t j) const {
  const Matrix2 rho = unnormalised(prefix, j);
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw DomainError("prefix has zero probability");
  return QubitState(Matrix2(rho / tr));
}

double EnumerationOracle::future_likelihood(std::uint32_t prefix, std::size_t j) const {
  if (j > steps_) throw DomainError("time index beyond the record");
  const std::uint32_t mask = (1u << j) - 1u;
  const std::uint32_t low = prefix & mask;
  double sum = 0.0;
  for (std::uint32_t r = 0; r < record_count(); ++r) {
    if ((r & mask) == low) sum += joint_[r];
  }
  const double past = unnormalised(low, j).trace().real();
  if (!(past > 0.0)) throw DomainError("prefix has zero probability");
  return sum / past;
}

double EnumerationOracle::proposal_probability(std::uint32_t record) const {
  Matrix2 rho = rho0_.matrix();
  double prob = 1.0;
  for (std::size_t s = 0; s < steps_; ++s) {
    Matrix2 after_o = kraus_step(rho, record_.setup, record_.outcomes[s], params_, true, false);
    const double lo = after_o.trace().real();
    if (!(lo > 0.0)) return 0.0;
    after_o /= lo;
    const Matrix2 after_u = kraus_step(after_o, Setup::N, bit(record, s), params_, false, false);
    const double pu = after_u.trace().real();
    prob *= pu;
    if (!(pu > 0.0)) return 0.0;
    rho = after_u / pu;
  }
  return prob;
}

std::vector<QubitState> brute_force_smooth(const MeasurementRecord& record_O, const QubitState& rho0,
                                           const ModelParams& p) {
  return EnumerationOracle(record_O, rho0, p).smoothed();
}

}  // namespace qsmooth
