#include "proxy3d/error.hpp"

namespace proxy3d {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::BudgetTooSmall: return "BudgetTooSmall";
    case Errc::KOutOfRange: return "KOutOfRange";
    case Errc::OrderMismatch: return "OrderMismatch";
    case Errc::OddChannels: return "OddChannels";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::ParseError: return "ParseError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::PlacementFailure: return "PlacementFailure";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string compose(Errc code, const std::string& message,
                    std::optional<std::uint64_t> offset) {
  std::string out(to_string(code));
  if (offset) out += " at byte " + std::to_string(*offset);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message,
             std::optional<std::uint64_t> offset)
    : std::runtime_error(compose(code, message, offset)),
      code_(code),
      offset_(offset) {}

}  // namespace proxy3d
