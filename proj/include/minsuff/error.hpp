#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace minsuff {

enum class ErrorCode {
  NotHermitian,
  SingularState,
  DimensionMismatch,
  NumericalDegeneracy,
  AlgebraNotStabilized,
  OmegaInconsistent,
  LabelMismatch,
  NotMinimalForm,
  InvalidInput,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace minsuff
