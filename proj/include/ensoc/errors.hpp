#pragma once

#include <stdexcept>
#include <string>

namespace ensoc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of states, costates, controls or grids disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument is outside its admissible range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a structural invariant (metric, weights, schedule...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The active control set is empty or the schedule does not cover a time.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// An optional ingredient (modulus, derivatives) required by a diagnostic is absent.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// An enumeration or grid would exceed its configured budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Unknown builtin or parameter name.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// File or expression could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// The integrator produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(double time, int atom)
      : Error("non-finite state at t=" + std::to_string(time) +
              ", atom " + std::to_string(atom)),
        time_(time),
        atom_(atom) {}

  double time() const { return time_; }
  int atom() const { return atom_; }

 private:
  double time_;
  int atom_;
};

/// Terminal cost is not finite at a value-grid node.
class TerminalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ensoc
