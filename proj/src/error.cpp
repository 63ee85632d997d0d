#include "aoor/error.hpp"

namespace aoor {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension_mismatch";
    case ErrorKind::kAsymmetric: return "asymmetric_input";
    case ErrorKind::kNotHurwitz: return "not_hurwitz";
    case ErrorKind::kRankDeficient: return "rank_deficient";
    case ErrorKind::kNotPositiveDefinite: return "not_positive_definite";
    case ErrorKind::kInconsistent: return "inconsistent_system";
    case ErrorKind::kNonConvergence: return "non_convergence";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kConfig: return "configuration_error";
  }
  return "unknown";
}

}  // namespace aoor
