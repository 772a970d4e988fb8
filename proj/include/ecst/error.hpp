#pragma once

#include <stdexcept>
#include <string>

namespace ecst {

enum class ErrorCode {
  cutoff_too_small,
  degenerate_odd_cat,
  degenerate_amplitude,
  label_clash,
  dimension_mismatch,
  mode_mismatch,
  unknown_mode,
  zero_norm,
  non_normalizable,
  singular_basis,
  invalid_case,
  cutoff_leak,
  incomplete_tree,
  invalid_input,
  io_failure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::cutoff_too_small: return "cutoff-too-small";
    case ErrorCode::degenerate_odd_cat: return "degenerate-odd-cat";
    case ErrorCode::degenerate_amplitude: return "degenerate-amplitude";
    case ErrorCode::label_clash: return "label-clash";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::mode_mismatch: return "mode-mismatch";
    case ErrorCode::unknown_mode: return "unknown-mode";
    case ErrorCode::zero_norm: return "zero-norm";
    case ErrorCode::non_normalizable: return "non-normalizable";
    case ErrorCode::singular_basis: return "singular-basis";
    case ErrorCode::invalid_case: return "invalid-case";
    case ErrorCode::cutoff_leak: return "cutoff-leak";
    case ErrorCode::incomplete_tree: return "incomplete-tree";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::io_failure: return "io-failure";
  }
  return "unknown";
}

/// Every failure in the library surfaces as this exception; `code()` is
/// stable and meant for programmatic dispatch, `what()` for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ecst
