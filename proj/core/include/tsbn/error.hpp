#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsbn {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kLikelihoodMismatch,
  kConfigurationMismatch,
  kInvalidValue,
  kIo,
  kBadMagic,
  kCorrupt,
  kNonFiniteSignal,
  kInfeasibleConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a code so callers (and the CLI)
/// can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tsbn
