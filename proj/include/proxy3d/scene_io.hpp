#pragma once

// PX3D scene containers and PXTK token containers.
//
// PX3D layout (little-endian throughout):
//   "PX3D" | version u32 | flags u32 (bit0: 0=pixel, 1=patch) | frame_count u32
//   | H u32 | W u32 | patch_h u32 | patch_w u32 | C u32
//   then per frame: frame_index u32, features f32[patch_h*patch_w*C],
//   points f32[rows*cols*3], labels i32[rows*cols]
// where rows x cols is H x W for pixel bundles and patch_h x patch_w for
// patch bundles.
//
// PXTK layout:
//   "PXTK" | version u32 | K u32 | C u32 | G u32 | meta_len u32 | meta (UTF-8 JSON)
//   | G x (label i32, count u32, centroid f32[3]) | tokens f32[K*C]
//   | coords f32[K*3] | group_labels i32[K]

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace proxy3d {

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kSceneHeaderBytes = 36;
inline constexpr std::size_t kTokenHeaderBytes = 24;
inline constexpr std::int32_t kBackgroundLabel = -1;

enum class Granularity : std::uint32_t { Pixel = 0, Patch = 1 };

struct FrameRecord {
  std::uint32_t frame_index = 0;
  std::vector<float> features;  // patch_h * patch_w * C
  std::vector<float> points;    // rows * cols * 3
  std::vector<std::int32_t> labels;  // rows * cols

  /// Bitwise comparison, so NaN points compare equal to themselves.
  friend bool operator==(const FrameRecord& a, const FrameRecord& b);
};

struct SceneBundle {
  Granularity granularity = Granularity::Patch;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t patch_h = 0;
  std::uint32_t patch_w = 0;
  std::uint32_t channels = 0;
  std::vector<FrameRecord> frames;

  /// Resolution at which points and labels are stored.
  std::uint32_t point_rows() const { return granularity == Granularity::Pixel ? height : patch_h; }
  std::uint32_t point_cols() const { return granularity == Granularity::Pixel ? width : patch_w; }

  std::size_t feature_count() const { return std::size_t{patch_h} * patch_w * channels; }
  std::size_t point_count() const { return std::size_t{point_rows()} * point_cols(); }
  std::size_t patches_per_frame() const { return std::size_t{patch_h} * patch_w; }

  /// Bytes occupied by one frame record in the container.
  std::uint64_t frame_bytes() const;

  /// Throws DimensionMismatch or InvariantViolation.
  void validate() const;

  friend bool operator==(const SceneBundle&, const SceneBundle&) = default;
};

struct GroupEntry {
  std::int32_t label = 0;
  std::uint32_t count = 0;
  std::array<float, 3> centroid{};

  friend bool operator==(const GroupEntry& a, const GroupEntry& b);
};

struct ProxySequence {
  std::uint32_t k = 0;
  std::uint32_t channels = 0;
  std::vector<float> tokens;  // k * channels
  std::vector<float> coords;  // k * 3
  std::vector<std::int32_t> group_labels;  // k
  std::vector<GroupEntry> group_table;
  nlohmann::json meta = nlohmann::json::object();

  /// Throws InvariantViolation or DimensionMismatch.
  void validate() const;

  friend bool operator==(const ProxySequence& a, const ProxySequence& b);
};

std::vector<std::uint8_t> encode_scene(const SceneBundle& bundle);
SceneBundle decode_scene(std::span<const std::uint8_t> bytes);
SceneBundle read_scene(const std::filesystem::path& path);
void write_scene(const SceneBundle& bundle, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tokens(const ProxySequence& seq);
ProxySequence decode_tokens(std::span<const std::uint8_t> bytes);
ProxySequence read_tokens(const std::filesystem::path& path);
void write_tokens(const ProxySequence& seq, const std::filesystem::path& path);

/// Exact PX3D file size for the given dimensions.
std::uint64_t scene_file_size(Granularity granularity, std::uint32_t frames, std::uint32_t height,
                              std::uint32_t width, std::uint32_t patch_h, std::uint32_t patch_w,
                              std::uint32_t channels);

/// Exact PXTK file size for the given dimensions.
std::uint64_t token_file_size(std::uint32_t k, std::uint32_t channels, std::uint32_t groups,
                              std::uint32_t meta_len);

/// Returns the 4-byte magic of a file, or an empty string if shorter.
std::string peek_magic(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace proxy3d
