#pragma once

#include <stdexcept>
#include <string>

namespace rntraj {

/// Base class for every failure the toolkit reports. `kind()` is a stable,
/// machine-parseable class name; the CLI prints it as the first token of
/// its one-line error message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Malformed file content.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse_error", what) {}
};

/// Input violates a documented precondition or invariant.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

/// Reference to an intersection or segment that does not exist.
class UnknownId : public Error {
 public:
  explicit UnknownId(const std::string& what) : Error("unknown_id", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

/// Non-finite values in a forward/backward pass or a loss.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric_error", what) {}
};

/// A generated row could not be mapped to a segment (zero norm).
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, int row) : Error("decode_error", what), row_(row) {}
  int row() const noexcept { return row_; }

 private:
  int row_;
};

/// Simulation could not produce a routable trajectory.
class RoutingError : public Error {
 public:
  explicit RoutingError(const std::string& what) : Error("routing_error", what) {}
};

}  // namespace rntraj
