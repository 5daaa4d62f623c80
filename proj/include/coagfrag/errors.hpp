#ifndef COAGFRAG_ERRORS_HPP
#define COAGFRAG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coagfrag {

enum class ErrorCode {
  NotSorted,
  MassGain,
  UnitFirstRatio,
  IndexOutOfRange,
  IndexOrder,
  DomainError,
  RateOverflow,
  GridOverflow,
  StabilityViolation,
  NoConvergence,
  InvalidConfig,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// StabilityViolation carries the largest admissible step.
class StabilityError : public Error {
 public:
  StabilityError(std::string msg, double suggested_dt)
      : Error(ErrorCode::StabilityViolation, std::move(msg)), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

}  // namespace coagfrag

#endif
