#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dta {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite input or mismatched shapes.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A cost specification that violates its invariants (e.g. a_i <= 0).
class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

/// A network model that violates its invariants (e.g. self-weight <= 0).
class InvalidModelError : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration requested beyond the supported edge count.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// The expected weight matrix has no spectral gap.
class InfeasibleNetworkError : public Error {
 public:
  using Error::Error;
};

class InfeasiblePlanError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when an iterate becomes non-finite or exceeds the blow-up threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(int replica, std::int64_t iteration)
      : Error("iterate diverged in replica " + std::to_string(replica) +
              " at iteration " + std::to_string(iteration)),
        replica_(replica),
        iteration_(iteration) {}

  int replica() const noexcept { return replica_; }
  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  int replica_;
  std::int64_t iteration_;
};

}  // namespace dta
