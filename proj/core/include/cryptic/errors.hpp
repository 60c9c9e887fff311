#pragma once

#include <stdexcept>
#include <string>

namespace cryptic {

/// Base of every error raised by the library. Callers that only need to
/// report a failure can catch this; the subclasses carry the category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file or directory the caller named cannot be read.
class InputError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

class UndefinedSimilarityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class PathError : public Error {
 public:
  using Error::Error;
};

class EmptyUnitError : public Error {
 public:
  using Error::Error;
};

class MissingFeatureError : public Error {
 public:
  explicit MissingFeatureError(std::string id)
      : Error("missing feature for record '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Errors tied to a line of an input file (1-based, header is line 1).
class LineError : public Error {
 public:
  LineError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public LineError {
 public:
  using LineError::LineError;
};

class RangeError : public LineError {
 public:
  using LineError::LineError;
};

}  // namespace cryptic
