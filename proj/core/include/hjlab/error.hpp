#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hjlab {

enum class ErrorCode {
  InvalidArgument,
  SearchWindowTooSmall,
  VelocityOutOfWindow,
  TableWindowTooSmall,
  NonConvexBlend,
  DegenerateForms,
  WindowExhausted,
  NotConverged,
  OptimizerStalled,
  DualRangeExceeded,
  CorrectorMismatch,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All numerical failures surface as this exception; `code()` lets callers
// branch on the failure kind without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace hjlab
