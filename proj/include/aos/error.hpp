#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aos {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `line` is 1-based; 0 when the failure is not tied to a line.
struct ParseError : Error {
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

struct ParameterError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct NoDataError : DomainError {
  using DomainError::DomainError;
};

struct FitError : Error {
  FitError(const std::string& what, int iterations, double residual_norm)
      : Error(what), iterations(iterations), residual_norm(residual_norm) {}
  int iterations;
  double residual_norm;
};

/// Invalid scenario configuration. `field` names the offending key (section.key).
struct ConfigError : Error {
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field(std::move(field)) {}
  std::string field;
};

}  // namespace aos
