#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trendfollow {

enum class ErrorCode {
  invalid_parameter,
  size_mismatch,
  not_positive_definite,
  degenerate_spectrum,
  inversion_failure,
  out_of_range,
  tail_fit_unavailable,
  model_unsupported,
  no_profitable_eta,
  fit_failure,
  series_too_short,
  non_positive_price,
  malformed_input,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library exception; the code lets callers (and the CLI exit status) branch on the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const char* what) {
  if (!ok) fail(code, what);
}
}  // namespace detail

}  // namespace trendfollow
