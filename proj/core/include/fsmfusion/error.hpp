#pragma once

#include <stdexcept>
#include <string>

namespace fsmfusion {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed machine, KISS2, manifest or scenario text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A machine violates a structural invariant (duplicate ids, partial table, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A product construction exceeded its configured state limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A machine is not below the product it was mapped against, or two
/// partitions live over different products.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

/// Recovery could not produce a unique answer: more faults than the budget.
class RecoveryError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsmfusion
