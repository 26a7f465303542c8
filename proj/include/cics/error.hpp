#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cics {

/// Machine-readable failure categories. Every exception thrown by the library
/// carries one of these so reports can be classified without string matching.
enum class ErrorCode {
  precondition,
  domain_violation,
  non_finite,
  unbounded_signal,
  degenerate_region,
  out_of_interval,
  no_stability,
  non_attraction,
  existence_failure,
  validation_failure,
  renewal_failure,
  conclusion_violation,
  inversion_singularity,
  non_converging_input,
  config,
  io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace cics
