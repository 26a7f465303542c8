#include "cics/error.hpp"

namespace cics {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::domain_violation: return "domain-violation";
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::unbounded_signal: return "unbounded-signal";
    case ErrorCode::degenerate_region: return "degenerate-region";
    case ErrorCode::out_of_interval: return "out-of-interval";
    case ErrorCode::no_stability: return "no-stability";
    case ErrorCode::non_attraction: return "non-attraction";
    case ErrorCode::existence_failure: return "existence-failure";
    case ErrorCode::validation_failure: return "validation-failure";
    case ErrorCode::renewal_failure: return "renewal-failure";
    case ErrorCode::conclusion_violation: return "conclusion-violation";
    case ErrorCode::inversion_singularity: return "inversion-singularity";
    case ErrorCode::non_converging_input: return "non-converging-input";
    case ErrorCode::config: return "config-error";
    case ErrorCode::io: return "io-error";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace cics
