#include "trendfollow/error.hpp"

namespace trendfollow {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::size_mismatch: return "size-mismatch";
    case ErrorCode::not_positive_definite: return "not-positive-definite";
    case ErrorCode::degenerate_spectrum: return "degenerate-spectrum";
    case ErrorCode::inversion_failure: return "inversion-failure";
    case ErrorCode::out_of_range: return "out-of-range";
    case ErrorCode::tail_fit_unavailable: return "tail-fit-unavailable";
    case ErrorCode::model_unsupported: return "model-unsupported";
    case ErrorCode::no_profitable_eta: return "no-profitable-eta";
    case ErrorCode::fit_failure: return "fit-failure";
    case ErrorCode::series_too_short: return "series-too-short";
    case ErrorCode::non_positive_price: return "non-positive-price";
    case ErrorCode::malformed_input: return "malformed-input";
  }
  return "unknown";
}

}  // namespace trendfollow
