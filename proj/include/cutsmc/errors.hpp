// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cutsmc {

/// Failure categories surfaced by the library. The CLI maps these onto
/// process exit codes (configuration/invalid input -> 2, numerical -> 3,
/// io -> 4).
enum class ErrorKind {
  invalid_input,
  invalid_state,
  configuration,
  model_evaluation,
  degenerate_weights,
  degenerate_support,
  degenerate_chains,
  kernel_failure,
  singular_input,
  undefined_input,
  evaluation,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_state: return "invalid-state";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::model_evaluation: return "model-evaluation";
    case ErrorKind::degenerate_weights: return "degenerate-weights";
    case ErrorKind::degenerate_support: return "degenerate-support";
    case ErrorKind::degenerate_chains: return "degenerate-chains";
    case ErrorKind::kernel_failure: return "kernel-failure";
    case ErrorKind::singular_input: return "singular-input";
    case ErrorKind::undefined_input: return "undefined-input";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace cutsmc
