#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lakelab {

enum class ErrorKind {
  InvalidDepth,
  InvalidSequence,
  InvalidGeometry,
  DegenerateWeight,
  DegenerateCoefficient,
  IterationLimit,
  EmptyBand,
  NoIsland,
  BadCutoff,
  TimeStepTooLarge,
  BadTestFunction,
  Config,
  Io,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidDepth: return "InvalidDepth";
    case ErrorKind::InvalidSequence: return "InvalidSequence";
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::DegenerateWeight: return "DegenerateWeight";
    case ErrorKind::DegenerateCoefficient: return "DegenerateCoefficient";
    case ErrorKind::IterationLimit: return "IterationLimit";
    case ErrorKind::EmptyBand: return "EmptyBand";
    case ErrorKind::NoIsland: return "NoIsland";
    case ErrorKind::BadCutoff: return "BadCutoff";
    case ErrorKind::TimeStepTooLarge: return "TimeStepTooLarge";
    case ErrorKind::BadTestFunction: return "BadTestFunction";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class LakeError : public std::runtime_error {
 public:
  LakeError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw LakeError(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace lakelab
