#pragma once

#include <stdexcept>
#include <string>

namespace iontrap {

/// Raised when a Fock truncation or matrix dimension is unusable.
class InvalidDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operand does not live on the expected composite space.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for malformed model or run configuration. `field()` names the
/// offending key in dotted form (e.g. "model.modes[0].frequency_mhz").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raised when the integrator loses trace beyond tolerance.
class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iontrap
