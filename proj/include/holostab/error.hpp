#pragma once

#include <stdexcept>
#include <string>

namespace holostab {

enum class ErrorCode {
  MissingFace,
  DuplicateSimplex,
  SelfLoop,
  UnknownVertex,
  NegativeWeight,
  NonPositiveVertexWeight,
  InvalidArgument,
  NoConvergence,
  KernelDimMismatch,
  BreakdownNegativePivot,
  ZeroProjectedNorm,
  MaxInnerIterations,
  NotConverged,
  DegenerateConfiguration,
  MalformedHeader,
  MissingColumn,
  UnknownZone,
  DisconnectedZones,
  Io,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingFace: return "MissingFace";
    case ErrorCode::DuplicateSimplex: return "DuplicateSimplex";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonPositiveVertexWeight: return "NonPositiveVertexWeight";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::KernelDimMismatch: return "KernelDimMismatch";
    case ErrorCode::BreakdownNegativePivot: return "BreakdownNegativePivot";
    case ErrorCode::ZeroProjectedNorm: return "ZeroProjectedNorm";
    case ErrorCode::MaxInnerIterations: return "MaxInnerIterations";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnknownZone: return "UnknownZone";
    case ErrorCode::DisconnectedZones: return "DisconnectedZones";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// input errors map to exit code 1, numerical failures to 3
inline bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingFace:
    case ErrorCode::DuplicateSimplex:
    case ErrorCode::SelfLoop:
    case ErrorCode::UnknownVertex:
    case ErrorCode::NegativeWeight:
    case ErrorCode::NonPositiveVertexWeight:
    case ErrorCode::InvalidArgument:
    case ErrorCode::MalformedHeader:
    case ErrorCode::MissingColumn:
    case ErrorCode::UnknownZone:
    case ErrorCode::DisconnectedZones:
    case ErrorCode::DegenerateConfiguration:
    case ErrorCode::Io:
      return true;
    default:
      return false;
  }
}

}  // namespace holostab
