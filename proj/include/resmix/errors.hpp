#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resmix {

enum class Errc {
  Disconnected,
  EmptyBoundary,
  Asymmetric,
  BadDensity,
  NegativeRate,
  NonFinite,
  InvalidArgument,
  ParseError,
  CapExceeded,
  NotPositiveDefinite,
  NoConvergence,
  NumericalBreakdown,
  RuntimeCap,
};

std::string_view to_string(Errc code);

/// Every failure in the library surfaces as an Error carrying a category code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace resmix
