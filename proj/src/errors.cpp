#include "resmix/errors.hpp"

namespace resmix {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::Disconnected: return "Disconnected";
    case Errc::EmptyBoundary: return "EmptyBoundary";
    case Errc::Asymmetric: return "Asymmetric";
    case Errc::BadDensity: return "BadDensity";
    case Errc::NegativeRate: return "NegativeRate";
    case Errc::NonFinite: return "NonFinite";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NumericalBreakdown: return "NumericalBreakdown";
    case Errc::RuntimeCap: return "RuntimeCap";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace resmix
