#pragma once

#include <stdexcept>
#include <string>

namespace bwshare {

enum class ErrorCode {
  EmptyRoute,
  NonpositiveCapacity,
  NonBinaryEntry,
  DimensionMismatch,
  InvalidInput,
  TooManyAtoms,
  TooManyRoutes,
  NonConvergence,
  AllocatorFailure,
  AtomBudgetExceeded,
  InvalidScenario,
  SchemaError,
  SemanticError,
  NotInP,
  EmptyCriticalSet,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyRoute: return "EmptyRoute";
    case ErrorCode::NonpositiveCapacity: return "NonpositiveCapacity";
    case ErrorCode::NonBinaryEntry: return "NonBinaryEntry";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::TooManyAtoms: return "TooManyAtoms";
    case ErrorCode::TooManyRoutes: return "TooManyRoutes";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::AllocatorFailure: return "AllocatorFailure";
    case ErrorCode::AtomBudgetExceeded: return "AtomBudgetExceeded";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::SemanticError: return "SemanticError";
    case ErrorCode::NotInP: return "NotInP";
    case ErrorCode::EmptyCriticalSet: return "EmptyCriticalSet";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception type carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace bwshare
