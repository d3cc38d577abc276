#pragma once

#include <stdexcept>
#include <string>

namespace dermeval {

enum class ErrorCode {
  // tensor files
  BadMagic,
  RankOutOfRange,
  InvalidDimension,
  TruncatedPayload,
  NonFiniteValue,
  IoFailure,
  // documents
  ParseError,
  InvariantViolation,
  BoxOutOfBounds,
  // saliency
  ShapeMismatch,
  EmptyStack,
  GridMismatch,
  MissingInput,
  // relevance
  TauOutOfRange,
  DimensionMismatch,
  // triage
  ProbabilityOutOfRange,
  GreenZoneNotRegistrable,
  // stats
  InvalidCounts,
  NoDiscordantPairs,
  DegenerateDenominator,
  MissingReferenceLabels,
  // cli
  BadConfig,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dermeval
