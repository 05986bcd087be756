#include "smdl/core/error.hpp"

namespace smdl {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::config: return "config error";
    case ErrorKind::rank_deficient: return "rank deficiency";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::fit_window: return "fit window";
    case ErrorKind::chain_diverged: return "chain diverged";
    case ErrorKind::training_diverged: return "training diverged";
    case ErrorKind::covering_failure: return "covering failure";
    case ErrorKind::unreachable_tolerance: return "unreachable tolerance";
    case ErrorKind::quantization_failed: return "quantization failed";
  }
  return "unknown";
}

bool is_numerical(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::config:
    case ErrorKind::insufficient_data:
    case ErrorKind::fit_window:
      return false;
    default:
      return true;
  }
}

}  // namespace smdl
