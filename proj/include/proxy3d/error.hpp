#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace proxy3d {

enum class Errc {
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  DimensionMismatch,
  IoFailure,
  InvariantViolation,
  GridMismatch,
  BudgetTooSmall,
  KOutOfRange,
  OrderMismatch,
  OddChannels,
  IndexOutOfRange,
  ParseError,
  ShapeMismatch,
  DivergenceDetected,
  PlacementFailure,
  InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library. `offset()` is set for container
/// parse errors and names the byte position where decoding stopped.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::uint64_t> offset = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::uint64_t> offset_;
};

}  // namespace proxy3d
