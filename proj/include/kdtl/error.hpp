#ifndef KDTL_ERROR_HPP
#define KDTL_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kdtl {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-positive mass, velocity, temperature and similar out-of-domain inputs.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid construction parameters (node counts, mismatched periods, unknown config keys).
class ConfigError : public Error {
public:
  using Error::Error;
};

class FormulaError : public Error {
public:
  using Error::Error;
};

class StatisticsError : public Error {
public:
  using Error::Error;
};

class CalibrationError : public Error {
public:
  using Error::Error;
};

class FitError : public Error {
public:
  using Error::Error;
};

/// Errors tied to a line of a text input. Line numbers are 1-based; 0 means "whole file".
class LineError : public Error {
public:
  LineError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Wrong header or grammar of a tabular file.
class FormatError : public LineError {
public:
  using LineError::LineError;
};

/// A row that does not parse, or violates ordering.
class IngestionError : public LineError {
public:
  using LineError::LineError;
};

}  // namespace kdtl

#endif  // KDTL_ERROR_HPP
