#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hqcgbda {

enum class ErrorCode {
  EmptyMicrogrid,
  DemandLengthMismatch,
  BoundsInverted,
  NegativeCostCurvature,
  InvalidParameter,
  DimensionMismatch,
  NonConvexUnit,
  ToleranceTooTight,
  MixedStatus,
  NoViolation,
  TooLargeForExhaustive,
  EmptyInstance,
  UnsatisfiableCut,
  NegativeRange,
  LengthMismatch,
  EmptyPool,
  TooLarge,
  InvalidSpec,
  IoError,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyMicrogrid: return "EmptyMicrogrid";
    case ErrorCode::DemandLengthMismatch: return "DemandLengthMismatch";
    case ErrorCode::BoundsInverted: return "BoundsInverted";
    case ErrorCode::NegativeCostCurvature: return "NegativeCostCurvature";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonConvexUnit: return "NonConvexUnit";
    case ErrorCode::ToleranceTooTight: return "ToleranceTooTight";
    case ErrorCode::MixedStatus: return "MixedStatus";
    case ErrorCode::NoViolation: return "NoViolation";
    case ErrorCode::TooLargeForExhaustive: return "TooLargeForExhaustive";
    case ErrorCode::EmptyInstance: return "EmptyInstance";
    case ErrorCode::UnsatisfiableCut: return "UnsatisfiableCut";
    case ErrorCode::NegativeRange: return "NegativeRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is the
/// stable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hqcgbda
