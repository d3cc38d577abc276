#include "dermeval/error.hpp"

namespace dermeval {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::RankOutOfRange: return "RankOutOfRange";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::BoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::TauOutOfRange: return "TauOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::GreenZoneNotRegistrable: return "GreenZoneNotRegistrable";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::NoDiscordantPairs: return "NoDiscordantPairs";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::MissingReferenceLabels: return "MissingReferenceLabels";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace dermeval
