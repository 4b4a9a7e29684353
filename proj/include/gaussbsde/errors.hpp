#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaussbsde {

enum class ErrorKind {
  InvalidArgument,
  NonMonotoneVariance,
  OutOfRange,
  CholeskyFailure,
  EmptyMeasure,
  NonpositiveMass,
  UnsupportedFunctional,
  ProbeViolation,
  EmptyCloud,
  PicardDivergence,
  RegressionIllConditioned,
  DegenerateInterval,
  DegenerateIncrement,
  GridMismatch,
  HypothesisUnsatisfied,
  UnsupportedScenario,
  ConfigInvalid,
  IoFailure,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-checkable kind next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonMonotoneVariance: return "NonMonotoneVariance";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::CholeskyFailure: return "CholeskyFailure";
    case ErrorKind::EmptyMeasure: return "EmptyMeasure";
    case ErrorKind::NonpositiveMass: return "NonpositiveMass";
    case ErrorKind::UnsupportedFunctional: return "UnsupportedFunctional";
    case ErrorKind::ProbeViolation: return "ProbeViolation";
    case ErrorKind::EmptyCloud: return "EmptyCloud";
    case ErrorKind::PicardDivergence: return "PicardDivergence";
    case ErrorKind::RegressionIllConditioned: return "RegressionIllConditioned";
    case ErrorKind::DegenerateInterval: return "DegenerateInterval";
    case ErrorKind::DegenerateIncrement: return "DegenerateIncrement";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::HypothesisUnsatisfied: return "HypothesisUnsatisfied";
    case ErrorKind::UnsupportedScenario: return "UnsupportedScenario";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace gaussbsde
