#pragma once

#include <stdexcept>
#include <string>

namespace diarkit {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Structurally valid input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad argument to an operation (out-of-range knob, negative duration, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// File could not be read/written or has the wrong framing.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Not enough data to estimate a model (e.g. fewer vectors than dim+1).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A metric whose denominator is empty. The caller decides policy;
/// aggregation catches this, warns, and excludes the recording.
class ScoreUndefinedError : public Error {
 public:
  using Error::Error;
};

}  // namespace diarkit
