#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dgsm {

enum class ErrorKind {
  CyclicGraph,
  DanglingReference,
  DegenerateSum,
  InvalidEvidence,
  InvalidParams,
  UnknownLabel,
  ShapeMismatch,
  RobotInWall,
  InsufficientCoverage,
  InfeasibleGeometry,
  SingleClass,
  EmptyClass,
  CoverageMismatch,
  ParseError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CyclicGraph: return "CyclicGraph";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::DegenerateSum: return "DegenerateSum";
    case ErrorKind::InvalidEvidence: return "InvalidEvidence";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::RobotInWall: return "RobotInWall";
    case ErrorKind::InsufficientCoverage: return "InsufficientCoverage";
    case ErrorKind::InfeasibleGeometry: return "InfeasibleGeometry";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::CoverageMismatch: return "CoverageMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace dgsm
