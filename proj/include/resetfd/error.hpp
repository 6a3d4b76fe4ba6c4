#pragma once

#include <stdexcept>
#include <string>

namespace resetfd {

/// Broad failure categories. The CLI maps each one to its own exit code.
enum class ErrorKind {
  Parse = 2,
  Validation = 3,
  Precondition = 4,
  Numerical = 5,
  Convergence = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& what) : Error(ErrorKind::Precondition, what) {}
};

/// Division by an exactly-zero denominator, singular sensitivity, pole at a harmonic, ...
struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& what) : Error(ErrorKind::Convergence, what) {}
};

/// Throws the concrete error type that belongs to `kind`.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::Parse: throw ParseError(what);
    case ErrorKind::Validation: throw ValidationError(what);
    case ErrorKind::Precondition: throw PreconditionError(what);
    case ErrorKind::Numerical: throw NumericalError(what);
    case ErrorKind::Convergence: throw ConvergenceError(what);
  }
  throw Error(kind, what);
}

}  // namespace resetfd
