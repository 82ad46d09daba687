#pragma once

#include <stdexcept>
#include <string>

namespace ttc {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, schema violation or precondition misuse.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A strategy or request needs something the backend does not offer.
class CapabilityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A numeric parameter lies outside its declared valid range.
class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Signal processing input that makes the requested operation meaningless.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Corpus lacks the clips a task needs.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Question generation could not satisfy a template.
class GenerationError : public Error {
 public:
  using Error::Error;
};

enum class BackendErrorKind { Auth, RateLimited, Transient, Malformed, Rejected };

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  BackendErrorKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept {
    return kind_ == BackendErrorKind::RateLimited ||
           kind_ == BackendErrorKind::Transient;
  }

 private:
  BackendErrorKind kind_;
};

class MalformedVerifierOutput : public Error {
 public:
  using Error::Error;
};

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace ttc
