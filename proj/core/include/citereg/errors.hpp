#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace citereg {

/// Argument outside a function's mathematical domain (e.g. z <= 0 for log-gamma).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Matrix/vector sizes that do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Encoding or run configuration that cannot be honoured (unknown column,
/// undeclared base level, empty family list, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cell that could not be read. Rows are 1-based data rows (header excluded).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// A well-formed value that violates a data invariant (negative count,
/// non-positive value under a log transform).
class ValidationError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Response vector or design whose structure makes the model inestimable.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

/// Perfect or quasi-complete separation in the binary hurdle part.
class SeparationError : public std::runtime_error {
 public:
  SeparationError(const std::string& what, std::string column)
      : std::runtime_error(what), column_(std::move(column)) {}

  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class UnsupportedFamilyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace citereg
