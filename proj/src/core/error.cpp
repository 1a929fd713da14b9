#include "sprobe/error.hpp"

namespace sprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::UnsupportedSeverity: return "UnsupportedSeverity";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EncodeFailure: return "EncodeFailure";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::SteeringUnsupported: return "SteeringUnsupported";
    case ErrorCode::ImageEncodeError: return "ImageEncodeError";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::IncompleteResults: return "IncompleteResults";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::AnchorInsufficientSamples: return "AnchorInsufficientSamples";
    case ErrorCode::RunAborted: return "RunAborted";
  }
  return "Unknown";
}

}  // namespace sprobe
