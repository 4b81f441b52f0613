#pragma once

#include <stdexcept>
#include <string>

namespace symbranch {

enum class ErrorCode {
  InvalidArgument,
  NegativeRate,
  EmptySupport,
  NonNormalizable,
  QuadratureNotConverged,
  StepTooLarge,
  InvalidGenerator,
  RegimeMismatch,
  AsymmetricKernel,
  UnstableStep,
  InvalidConfig,
  Io,
};

constexpr const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::NonNormalizable: return "NonNormalizable";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::InvalidGenerator: return "InvalidGenerator";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::AsymmetricKernel: return "AsymmetricKernel";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Carries the error estimate reached when the refinement budget ran out.
class QuadratureNotConverged : public Error {
 public:
  QuadratureNotConverged(const std::string& message, double achieved)
      : Error(ErrorCode::QuadratureNotConverged,
              message + " (achieved error " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}

  double achieved_error() const noexcept { return achieved_; }

 private:
  double achieved_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace symbranch
