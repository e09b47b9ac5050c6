#pragma once

#include <stdexcept>
#include <string>

namespace catsim {

/// Invalid run configuration (particle count out of range, bad flag values).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the mathematical domain of an operation
/// (negative inverse temperature, wrong Sx parity, k > m, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A measurement outcome was requested whose probability is numerically zero.
class ImpossibleOutcome : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (e.g. passed an unnormalized state).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace catsim
