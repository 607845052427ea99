#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace monodromy {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad expression syntax, schema violations, unknown names.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical operation could not produce a trustworthy result.
/// `op()` names the operation that failed so front ends can report it.
class NumericError : public Error {
 public:
  NumericError(std::string op, const std::string& what)
      : Error(op + ": " + what), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

}  // namespace monodromy
