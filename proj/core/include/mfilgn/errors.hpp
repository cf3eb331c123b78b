#pragma once

#include <stdexcept>
#include <string>

namespace mfilgn {

/// Coarse failure category. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  kValidation = 1,
  kIo = 2,
  kNumerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad argument, precondition or malformed content.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::kValidation, what) {}
};

/// Image bytes that are readable but not in a supported encoding.
class FormatError : public ValidationError {
 public:
  explicit FormatError(const std::string& what) : ValidationError(what) {}
};

/// Structured-text parse failure. `field()` names the offending field path,
/// e.g. "sv[3]" or "scaler_min".
class ParseError : public ValidationError {
 public:
  ParseError(std::string field, const std::string& what);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

/// A numerical procedure hit a degenerate configuration (e.g. an all-zero
/// sample set handed to a distribution fit).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

}  // namespace mfilgn
