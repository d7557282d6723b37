#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cavitylc {

enum class ErrorCode {
  NonPositiveKappa,
  TruncationTooSmall,
  GridTooCoarse,
  NonFiniteValue,
  UnnormalizedState,
  StepSizeUnderflow,
  NonFiniteState,
  NoConvergence,
  OscillatoryResidual,
  InteractionUnsupported,
  BadSteadyState,
  EigenSolverFailure,
  WindowTooShort,
  NonuniformSampling,
  DegenerateSpectrum,
  TrajectoryTooShort,
  MissingObservable,
  IncompatibleOrbits,
  ResumeMismatch,
  PartialFailure,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveKappa: return "NonPositiveKappa";
    case ErrorCode::TruncationTooSmall: return "TruncationTooSmall";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::UnnormalizedState: return "UnnormalizedState";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OscillatoryResidual: return "OscillatoryResidual";
    case ErrorCode::InteractionUnsupported: return "InteractionUnsupported";
    case ErrorCode::BadSteadyState: return "BadSteadyState";
    case ErrorCode::EigenSolverFailure: return "EigenSolverFailure";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::NonuniformSampling: return "NonuniformSampling";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::TrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::MissingObservable: return "MissingObservable";
    case ErrorCode::IncompatibleOrbits: return "IncompatibleOrbits";
    case ErrorCode::ResumeMismatch: return "ResumeMismatch";
    case ErrorCode::PartialFailure: return "PartialFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

// All library failures surface as this exception; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cavitylc
