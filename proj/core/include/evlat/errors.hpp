#pragma once

#include <stdexcept>
#include <string>

namespace evlat {

enum class ErrorKind {
  NonFiniteIntegrand,
  ToleranceNotMet,
  NonFiniteVectorField,
  DomainError,
  NonFiniteGradient,
  InvalidDrive,
  UnboundedRate,
  OutOfDomain,
  InvalidTemperature,
  ShapeError,
  DegenerateRate,
  NonFiniteState,
  DegenerateChannel,
  TheoremViolation,
  DegenerateBand,
  CollisionError,
  NonFiniteLoss,
  TrainingDiverged,
  EmptyBand,
  IoError,
  ConfigError,
};

const char* error_kind_name(ErrorKind kind);

/// Single exception type for all domain errors; tests dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace evlat
