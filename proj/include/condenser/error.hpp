#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace condenser {

enum class ErrorCode {
  InfeasibleSpec,
  DimensionMismatch,
  UnsupportedDomain,
  SingularPair,
  OutsideDomain,
  CloudMismatch,
  SolverDiverged,
  Infeasible,
  DegenerateConstraint,
  InvalidSigma,
  WrongField,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnsupportedDomain: return "UnsupportedDomain";
    case ErrorCode::SingularPair: return "SingularPair";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::CloudMismatch: return "CloudMismatch";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::DegenerateConstraint: return "DegenerateConstraint";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::WrongField: return "WrongField";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace condenser
