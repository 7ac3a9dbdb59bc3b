#pragma once

#include <stdexcept>
#include <string>

namespace rsmp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument: unknown registry name, out-of-range parameter, shape
/// mismatch between inputs.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A coefficient returned a non-finite value, or a registry problem failed
/// its own consistency checks.
class InvalidProblem : public Error {
 public:
  using Error::Error;
};

/// Forward integration produced a non-finite state.
class IntegrationBlowup : public Error {
 public:
  IntegrationBlowup(const std::string& what, std::size_t path, std::size_t step)
      : Error(what), path_(path), step_(step) {}
  std::size_t path() const { return path_; }
  std::size_t step() const { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

/// Backward regression produced a non-finite value.
class SolverDivergence : public Error {
 public:
  using Error::Error;
};

/// An operation was called without its mathematical hypothesis holding,
/// e.g. a second-order check on a control that is not singular.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace rsmp
