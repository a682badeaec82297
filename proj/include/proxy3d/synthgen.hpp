#pragma once

// Deterministic synthetic scenes: axis-aligned boxes on a floor, seen by a
// ring of pinhole cameras, with exact ground truth for every emitted patch.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "proxy3d/geometry.hpp"
#include "proxy3d/scene_io.hpp"

namespace proxy3d {

struct SceneSpec {
  std::uint64_t seed = 0;
  std::uint32_t frames = 32;
  std::uint32_t height = 512;
  std::uint32_t width = 512;
  std::uint32_t patch_h = 16;
  std::uint32_t patch_w = 21;
  std::uint32_t channels = 256;
  std::uint32_t objects = 8;
  Vec3 room_extent{8.0, 8.0, 3.0};
  double noise_std = 0.05;
  /// Pixel bundles need height = q * patch_h and width = q * patch_w.
  Granularity granularity = Granularity::Patch;

  void validate() const;
};

struct ObjectTruth {
  std::int32_t label = 0;
  std::uint32_t category = 0;
  Vec3 center{};
  Vec3 size{};
  std::vector<std::uint32_t> visible_patches;  // per frame, after dominant-label voting

  std::uint64_t total_patches() const;
};

struct CameraPose {
  Vec3 position{};
  /// World-from-camera rotation, row-major. Columns are the camera's right,
  /// down and forward axes expressed in world coordinates.
  std::array<double, 9> rotation{};
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;

  /// Unit ray direction in world coordinates through pixel position (u, v).
  Vec3 ray(double u, double v) const;
  /// Pixel position of a world point, or nullopt behind the camera.
  std::optional<std::array<double, 2>> project(const Vec3& world) const;
};

/// All positions are relative to the first camera's centre, z up.
struct GroundTruth {
  std::vector<ObjectTruth> objects;
  std::vector<CameraPose> cameras;
  double floor_height = 0.0;  // vertical coordinate of the floor plane

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& j);
};

/// Throws PlacementFailure if the boxes cannot be placed without overlap.
std::pair<SceneBundle, GroundTruth> generate_scene(const SceneSpec& spec, std::size_t threads = 1);

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path);

struct Translate {
  Vec3 offset{};
};
/// Frame k of the result carries the data of frame order[k]; frame indices
/// keep their original ascending values.
struct PermuteFrames {
  std::vector<std::size_t> order;
};
struct DropFrame {
  std::size_t position = 0;
};
using Perturbation = std::variant<Translate, PermuteFrames, DropFrame>;

SceneBundle perturb(const SceneBundle& bundle, const Perturbation& change);

}  // namespace proxy3d
