#pragma once

#include <stdexcept>
#include <string>

namespace qfc {

/// Base for every error raised by the library. The CLI maps these to exit
/// status 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "error"; }
};

/// Argument outside the physical or mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "domain"; }
};

/// Evaluation requested outside a model's tabulated validity range.
class ValidityError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "validity"; }
};

/// Inputs that are individually valid but mutually inconsistent.
class ConsistencyError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "consistency"; }
};

/// Root search bracket without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "bracket"; }
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double limit) : Error(what), limit_(limit) {}
  const char* category() const noexcept override { return "infeasible"; }
  /// The largest achievable value of the requested quantity.
  double limit() const noexcept { return limit_; }

 private:
  double limit_;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, double final_cost) : Error(what), final_cost_(final_cost) {}
  const char* category() const noexcept override { return "fit"; }
  double final_cost() const noexcept { return final_cost_; }

 private:
  double final_cost_;
};

class ResourceError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "resource"; }
};

/// Malformed input file or text.
class ParseError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "parse"; }
};

}  // namespace qfc
