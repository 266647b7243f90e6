#include <cmath>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"

namespace dv {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParam: return "InvalidParam";
    case ErrorCode::kNormalizationViolation: return "NormalizationViolation";
    case ErrorCode::kCohortTooLarge: return "CohortTooLarge";
    case ErrorCode::kOracleFailure: return "OracleFailure";
    case ErrorCode::kMemberAlreadyPresent: return "MemberAlreadyPresent";
    case ErrorCode::kSamePoint: return "SamePoint";
    case ErrorCode::kSchemeMismatch: return "SchemeMismatch";
    case ErrorCode::kTauTooLarge: return "TauTooLarge";
    case ErrorCode::kDegeneratePair: return "DegeneratePair";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNumericalDivergence: return "NumericalDivergence";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (n <= 30) {
    k = std::min(k, n - k);
    double r = 1.0;
    for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
    return std::round(r);
  }
  return std::exp(log_binomial(n, k));
}

}  // namespace dv
