#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arak {

enum class ErrorCode {
  AllZero,
  VarMismatch,
  IndexOutOfRange,
  ParseError,
  NotDivisible,
  SingularIntegrand,
  NoConvergence,
  BaseLocusHit,
  UnsupportedShape,
  NotFairlyLarge,
  NotPSD,
  NotSquareFree,
  BoxOverflow,
  UnknownSymbol,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace arak
