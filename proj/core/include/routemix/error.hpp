#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace routemix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, CSV, TOML). `where` names the line or field.
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Well-formed input that violates one or more invariants. Every violation
/// found is listed, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "validation failed";
    for (const auto& i : issues) {
      out += "\n  - ";
      out += i;
    }
    return out;
  }
  std::vector<std::string> issues_;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Numerical procedure that did not reach its convergence criterion.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace routemix
