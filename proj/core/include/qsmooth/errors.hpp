#pragma once

#include <stdexcept>
#include <string>

namespace qsmooth {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (|b| > 1, bad outcome, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The integrator produced a state it cannot repair (large PSD violation, purity loss, NaN).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// A measurement record contains an outcome of zero likelihood under the model.
class InconsistentRecordError : public Error {
 public:
  using Error::Error;
};

/// Every importance weight in a smoothing ensemble vanished.
class DegenerateEnsembleError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The projected cost of a run exceeds the configured budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsmooth
