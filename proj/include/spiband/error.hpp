#pragma once

#include <stdexcept>
#include <string>

namespace spiband {

enum class ErrorKind {
  RaggedRows,
  OutOfRange,
  NotMonotone,
  DimensionMismatch,
  EmptyMatrix,
  TooFewSamples,
  EmptyInput,
  NonIncreasingGrid,
  NoRetraction,
  ParseError,
  ZeroBaseline,
  IoError,
  InvalidConfig,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NotMonotone: return "NotMonotone";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NonIncreasingGrid: return "NonIncreasingGrid";
    case ErrorKind::NoRetraction: return "NoRetraction";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ZeroBaseline: return "ZeroBaseline";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace spiband
