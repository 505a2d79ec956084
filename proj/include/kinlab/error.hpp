#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kinlab {

enum class ErrorKind {
  Domain,        // argument outside the mathematical domain (gamma <= 1/2, p < 2, ...)
  Evaluation,    // coefficient returned a non-finite value
  Shape,         // fields on different grids
  Range,         // state escapes the velocity grid
  Precondition,  // caller broke an operation precondition
  Unsupported,   // configuration outside the implemented subset
  Config,        // run configuration failed validation
  BlowUp,        // non-finite state during time stepping
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Config validation failure; `field` is a JSON-pointer-like path such as
/// "/time/dt".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorKind::Config, field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t step, const std::string& what)
      : Error(ErrorKind::BlowUp, what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace kinlab
