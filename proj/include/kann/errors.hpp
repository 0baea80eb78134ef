#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kann {

/// Base of every error the toolkit raises. Callers that only need a message
/// can catch this; the subclasses exist so tests and the CLI can tell data
/// problems from usage problems.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A parameter is outside its admissible range (rank, epsilon, mode index ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Data violates a content invariant (non-finite value, zero-norm state ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A file does not follow the on-disk format. `field()` names the offending
/// header field ("magic", "version", "descr", "fortran_order", "shape", "data").
class FormatError : public Error {
public:
  FormatError(std::string field, const std::string &what)
      : Error(what), field_(std::move(field)) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Operating-system level I/O failure.
class IoError : public Error {
public:
  using Error::Error;
};

/// An iterative kernel hit its iteration cap.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Matrix too ill-conditioned to invert.
class ConditionError : public Error {
public:
  ConditionError(double condition, const std::string &what)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

/// A mode set is not closed under conjugate pairing. `completion()` is the
/// smallest closed superset.
class ModeClosureError : public Error {
public:
  ModeClosureError(std::vector<std::size_t> completion, const std::string &what)
      : Error(what), completion_(std::move(completion)) {}
  const std::vector<std::size_t> &completion() const noexcept { return completion_; }

private:
  std::vector<std::size_t> completion_;
};

} // namespace kann
