#pragma once

#include <stdexcept>
#include <string>

namespace cpreach {

enum class ErrorKind {
  DimensionMismatch,
  EmptySet,
  Unbounded,
  AllEmpty,
  Numerical,
  DomainError,
  NonFinite,
  ScheduleMismatch,
  Diverged,
  BranchBudgetExceeded,
  PartitionOverflow,
  InsufficientCalibration,
  ShapeMismatch,
  Config,
  Io,
  HashMismatch,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::AllEmpty: return "AllEmpty";
    case ErrorKind::Numerical: return "Numerical";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::BranchBudgetExceeded: return "BranchBudgetExceeded";
    case ErrorKind::PartitionOverflow: return "PartitionOverflow";
    case ErrorKind::InsufficientCalibration: return "InsufficientCalibration";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
    case ErrorKind::HashMismatch: return "HashMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Description without the kind prefix, for re-raising with added context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace cpreach
