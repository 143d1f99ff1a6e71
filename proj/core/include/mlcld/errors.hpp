#pragma once

#include <stdexcept>
#include <string>

namespace mlcld {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input is numerically degenerate (e.g. a zero-norm row to normalize).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A value became NaN/Inf, or a loss evaluation was non-finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed ARFF or label XML. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Dataset content is inconsistent (missing label column, non-binary label, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration. Names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A queue row violates the stored-row invariants.
class QueueRejectError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint could not be loaded.
class LoadError : public Error {
 public:
  enum class Kind { io, bad_magic, version_mismatch, truncated, shape_inconsistent };
  LoadError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mlcld
