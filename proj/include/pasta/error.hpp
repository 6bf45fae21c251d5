#pragma once

#include <stdexcept>
#include <string>

namespace pasta {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (shape mismatch, stale tape, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced during training. Carries the name of the
// component (network, loss term) where it was detected.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string component, const std::string& detail)
      : Error("training diverged in " + component + ": " + detail),
        component_(std::move(component)) {}

  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

}  // namespace pasta
