#pragma once

#include <stdexcept>
#include <string>

namespace oslda {

/// Broad failure classes. The CLI maps them onto exit codes.
enum class ErrorKind {
  Usage,      // bad arguments or configuration
  Data,       // malformed or inconsistent input data
  Numerical,  // singular systems, degenerate updates, domain errors
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define OSLDA_DEFINE_ERROR(Name, Kind)                                         \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, #Name ": " + what) {} \
  };

OSLDA_DEFINE_ERROR(SingularMatrix, Numerical)
OSLDA_DEFINE_ERROR(DegenerateUpdate, Numerical)
OSLDA_DEFINE_ERROR(DomainError, Numerical)
OSLDA_DEFINE_ERROR(ZeroDenominator, Numerical)
OSLDA_DEFINE_ERROR(SingularScatter, Numerical)
OSLDA_DEFINE_ERROR(InsufficientRank, Numerical)
OSLDA_DEFINE_ERROR(GoalUnreachable, Numerical)
OSLDA_DEFINE_ERROR(DimensionMismatch, Data)
OSLDA_DEFINE_ERROR(EmptyClass, Data)
OSLDA_DEFINE_ERROR(OutOfBounds, Data)
OSLDA_DEFINE_ERROR(ImageTooSmall, Data)
OSLDA_DEFINE_ERROR(ParseError, Data)
OSLDA_DEFINE_ERROR(VersionMismatch, Data)
OSLDA_DEFINE_ERROR(PoolExhausted, Data)
OSLDA_DEFINE_ERROR(ConfigError, Usage)

#undef OSLDA_DEFINE_ERROR

}  // namespace oslda
