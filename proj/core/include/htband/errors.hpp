#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace htband {

/// Invalid parameters or inconsistent experiment settings.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Index or count outside the valid range.
class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A structural input check failed (pattern density, symmetry, membership).
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::size_t offending_count = 0)
      : std::runtime_error(what), offending_count_(offending_count) {}
  std::size_t offending_count() const noexcept { return offending_count_; }

 private:
  std::size_t offending_count_;
};

/// Iterative or direct numerical method failed.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t index = 0)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A stated precondition of a checked inequality does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A proven inequality was violated numerically; indicates a solver defect.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Persisted data failed checksum or schema-version validation.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace htband
