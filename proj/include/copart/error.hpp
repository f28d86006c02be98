#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace copart {

enum class ErrorCode {
  InvalidDimensions,
  NegativeEntry,
  SumNotOne,
  ZeroColumn,
  DimensionMismatch,
  NonPositiveEntry,
  OutOfRange,
  IndexOutOfRange,
  InvalidMove,
  InvalidSpec,
  InstanceTooLarge,
  NotBinary,
  PreconditionViolated,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::SumNotOne: return "SumNotOne";
    case ErrorCode::ZeroColumn: return "ZeroColumn";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidMove: return "InvalidMove";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Solver guards and preconditions, as opposed to bad input data.
  bool is_precondition() const noexcept {
    return code_ == ErrorCode::InstanceTooLarge || code_ == ErrorCode::NotBinary ||
           code_ == ErrorCode::PreconditionViolated;
  }

 private:
  ErrorCode code_;
};

}  // namespace copart
