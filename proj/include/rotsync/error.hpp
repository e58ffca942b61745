#pragma once

#include <stdexcept>
#include <string>

namespace rotsync {

enum class ErrorCode {
  RankDeficientInput,
  InvalidRange,
  EmptyInput,
  BadBlockShape,
  SingularProjection,
  DisconnectedGraph,
  DuplicateEdge,
  InvalidEdge,
  ZeroDegreeNode,
  ExtractionDegenerate,
  InvalidConfig,
  LengthMismatch,
  ParseError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficientInput: return "RankDeficientInput";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BadBlockShape: return "BadBlockShape";
    case ErrorCode::SingularProjection: return "SingularProjection";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::InvalidEdge: return "InvalidEdge";
    case ErrorCode::ZeroDegreeNode: return "ZeroDegreeNode";
    case ErrorCode::ExtractionDegenerate: return "ExtractionDegenerate";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rotsync
