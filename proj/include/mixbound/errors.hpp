#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mixbound {

// Base class for all library errors.  `code()` is a stable machine-readable
// tag ("RowSumViolation", "CrossCheckMismatch", ...); what() prepends it to
// the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Rejected input: shapes, values, indices, horizons, usage.  CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed to converge or two independent routes disagree.
// CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mixbound
