#pragma once

#include <stdexcept>
#include <string>

namespace mpo {

// Invalid configuration or argument values. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Base for oracle guards. CLI exit code 2.
class OracleGuardError : public std::runtime_error {
 public:
  explicit OracleGuardError(const std::string& what) : std::runtime_error(what) {}
};

// Exhaustive enumeration would exceed the configured node budget.
class CapacityError : public OracleGuardError {
 public:
  explicit CapacityError(const std::string& what) : OracleGuardError(what) {}
};

// Value computation does not converge (e.g. non-absorbing chain at gamma=1).
class DivergenceError : public OracleGuardError {
 public:
  explicit DivergenceError(const std::string& what) : OracleGuardError(what) {}
};

// Filesystem failures. CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mpo
