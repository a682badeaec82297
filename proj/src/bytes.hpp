#pragma once

// Little-endian byte cursor helpers shared by the container codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxy3d/error.hpp"

namespace proxy3d::detail {

/// a*b, or UINT64_MAX on overflow.
inline std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

inline std::uint64_t add_sat(std::uint64_t a, std::uint64_t b) {
  return b > UINT64_MAX - a ? UINT64_MAX : a + b;
}

class ByteWriter {
 public:
  void reserve(std::size_t n) { buf_.reserve(n); }

  void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void i32(std::int32_t v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void raw(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  template <typename T>
  void array(std::span<const T> values) {
    static_assert(sizeof(T) == 4);
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
      buf_.insert(buf_.end(), p, p + values.size_bytes());
    } else {
      for (T v : values) u32(std::bit_cast<std::uint32_t>(v));
    }
  }

  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader. Every short read raises TruncatedPayload naming the
/// offset of the field that could not be read.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void require(std::uint64_t n, std::string_view what) const {
    if (n > remaining()) {
      throw Error(Errc::TruncatedPayload,
                  "need " + std::to_string(n) + " bytes for " + std::string(what) + ", " +
                      std::to_string(remaining()) + " available",
                  pos_);
    }
  }

  void expect_magic(std::string_view m) {
    if (remaining() < m.size() ||
        std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0) {
      throw Error(Errc::BadMagic, "expected " + std::string(m), pos_);
    }
    pos_ += m.size();
  }

  std::uint32_t u32(std::string_view what) {
    require(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32(std::string_view what) { return std::bit_cast<std::int32_t>(u32(what)); }
  float f32(std::string_view what) { return std::bit_cast<float>(u32(what)); }

  std::span<const std::uint8_t> raw(std::size_t n, std::string_view what) {
    require(n, what);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  std::vector<T> array(std::uint64_t count, std::string_view what) {
    static_assert(sizeof(T) == 4);
    require(mul_sat(count, 4), what);
    std::vector<T> out(static_cast<std::size_t>(count));
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), data_.data() + pos_, count * 4);
      pos_ += count * 4;
    } else {
      for (auto& v : out) v = std::bit_cast<T>(u32(what));
    }
    return out;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace proxy3d::detail
