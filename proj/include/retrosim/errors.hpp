#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retrosim {

enum class ErrorKind {
  DegenerateInput,
  LayoutMismatch,
  ZeroProbabilityOutcome,
  FamilyIncomplete,
  NonCommutingCondition,
  ScheduleMismatch,
  ProtocolMalformed,
  ConfigError,
  NumericIntegrity,
  InvalidState,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::LayoutMismatch: return "LayoutMismatch";
    case ErrorKind::ZeroProbabilityOutcome: return "ZeroProbabilityOutcome";
    case ErrorKind::FamilyIncomplete: return "FamilyIncomplete";
    case ErrorKind::NonCommutingCondition: return "NonCommutingCondition";
    case ErrorKind::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorKind::ProtocolMalformed: return "ProtocolMalformed";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NumericIntegrity: return "NumericIntegrity";
    case ErrorKind::InvalidState: return "InvalidState";
  }
  return "Unknown";
}

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace retrosim
