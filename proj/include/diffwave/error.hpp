#pragma once

#include <stdexcept>
#include <string>

namespace diffwave {

/// Base class for every failure raised by the library. Each subclass names
/// one failure mode so callers can catch selectively.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DIFFWAVE_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

// self-similar profile
DIFFWAVE_DEFINE_ERROR(NoConvergence);
DIFFWAVE_DEFINE_ERROR(NonMonotone);
DIFFWAVE_DEFINE_ERROR(InsufficientTail);
DIFFWAVE_DEFINE_ERROR(InvalidArgument);

// wave field
DIFFWAVE_DEFINE_ERROR(NonPositiveTemperature);

// hydro solver
DIFFWAVE_DEFINE_ERROR(GridTooNarrow);

// perturbation analysis
DIFFWAVE_DEFINE_ERROR(IdentityViolation);

// rate harness
DIFFWAVE_DEFINE_ERROR(DegenerateFit);
DIFFWAVE_DEFINE_ERROR(SignViolation);

// configuration
DIFFWAVE_DEFINE_ERROR(ValidationError);

#undef DIFFWAVE_DEFINE_ERROR

/// Raised when a cell loses positivity of v or theta; carries the scaled time.
class PositivityLoss : public Error {
 public:
  PositivityLoss(const std::string& what, double tau) : Error(what), tau_(tau) {}
  double tau() const noexcept { return tau_; }

 private:
  double tau_;
};

/// JSON syntax error with the location reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_position)
      : Error(what), position_(byte_position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace diffwave
