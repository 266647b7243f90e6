#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace dv {

enum class ErrorCode {
  kInvalidParam,
  kNormalizationViolation,
  kCohortTooLarge,
  kOracleFailure,
  kMemberAlreadyPresent,
  kSamePoint,
  kSchemeMismatch,
  kTauTooLarge,
  kDegeneratePair,
  kLengthMismatch,
  kNumericalDivergence,
  kStorageFailure,
  kParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a utility evaluation fails; carries the canonical text of the
// subset that was being evaluated.
class OracleFailure : public Error {
 public:
  OracleFailure(std::string subset, const std::string& what)
      : Error(ErrorCode::kOracleFailure, "subset {" + subset + "}: " + what),
        subset_(std::move(subset)) {}

  const std::string& subset() const noexcept { return subset_; }

 private:
  std::string subset_;
};

}  // namespace dv
