#pragma once

#include <stdexcept>
#include <string>

namespace mvgame {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit statuses, so new failure kinds should derive from one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// An enumeration or tree would exceed a configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced while evaluating coefficients or payoffs.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A precondition that depends on problem structure (not just shapes) failed,
// e.g. calling a no-mean-field routine on a mean-field problem.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A Riccati path left the finite range before reaching the requested time.
class HorizonError : public Error {
 public:
  HorizonError(const std::string& what, double blowup_time)
      : Error(what), blowup_time_(blowup_time) {}
  double blowup_time() const { return blowup_time_; }

 private:
  double blowup_time_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, std::string field)
      : Error(what), line_(line), field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvgame
