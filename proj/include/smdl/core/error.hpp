#pragma once

#include <stdexcept>
#include <string>

namespace smdl {

enum class ErrorKind {
  invalid_input,
  config,
  rank_deficient,
  insufficient_data,
  fit_window,
  chain_diverged,
  training_diverged,
  covering_failure,
  unreachable_tolerance,
  quantization_failed,
};

const char* to_string(ErrorKind kind) noexcept;

// Validation errors map to CLI exit code 1, numerical failures to exit code 2.
bool is_numerical(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::invalid_input, message);
}

}  // namespace smdl
