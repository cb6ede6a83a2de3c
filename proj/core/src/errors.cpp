#include "evlat/errors.hpp"

namespace evlat {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::NonFiniteVectorField: return "NonFiniteVectorField";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::InvalidDrive: return "InvalidDrive";
    case ErrorKind::UnboundedRate: return "UnboundedRate";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::InvalidTemperature: return "InvalidTemperature";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::DegenerateRate: return "DegenerateRate";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::DegenerateChannel: return "DegenerateChannel";
    case ErrorKind::TheoremViolation: return "TheoremViolation";
    case ErrorKind::DegenerateBand: return "DegenerateBand";
    case ErrorKind::CollisionError: return "CollisionError";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::EmptyBand: return "EmptyBand";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace evlat
