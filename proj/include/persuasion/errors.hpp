#pragma once

#include <stdexcept>
#include <string>

namespace persuasion {

// Base of every error raised by the library. kind() is the stable name the
// CLI prints next to a failing computation.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PERSUASION_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  };

PERSUASION_DEFINE_ERROR(ZeroProbabilitySignal)
PERSUASION_DEFINE_ERROR(InvalidStrategy)
PERSUASION_DEFINE_ERROR(NonConvergence)
PERSUASION_DEFINE_ERROR(LPFailure)
PERSUASION_DEFINE_ERROR(RecoveryMismatch)
PERSUASION_DEFINE_ERROR(CorollaryViolation)
PERSUASION_DEFINE_ERROR(InvalidSpec)
PERSUASION_DEFINE_ERROR(DiscountOutOfRange)
PERSUASION_DEFINE_ERROR(NotIndependent)
PERSUASION_DEFINE_ERROR(SingularSystem)
PERSUASION_DEFINE_ERROR(InvalidHorizon)
PERSUASION_DEFINE_ERROR(DegenerateRatio)
PERSUASION_DEFINE_ERROR(IoError)

#undef PERSUASION_DEFINE_ERROR

// Malformed input text. line/column are 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("ParseError", what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A structural invariant of an input failed. path() is a JSON pointer to the
// offending value (empty when the failure is not tied to one location).
class InvariantViolation : public Error {
 public:
  InvariantViolation(const std::string& what, std::string path = {})
      : Error("InvariantViolation", what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace persuasion
