#pragma once

#include <stdexcept>
#include <string>

namespace klvote {

/// Base class for every error raised by the library. Each kind maps onto a
/// stable CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-domain numeric input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration, or input violating a configuration contract
/// (e.g. voting requested on detections without variances).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Detection and ground-truth id spaces disagree.
class IdMismatch : public Error {
 public:
  using Error::Error;
};

/// Optimizer produced a non-finite loss or parameter.
class Divergence : public Error {
 public:
  using Error::Error;
};

}  // namespace klvote
