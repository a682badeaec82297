#pragma once

// Aligns pixel-level masks and point maps to the feature-map patch grid and
// flattens a scene into per-patch (feature, point, label) triplets.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "proxy3d/geometry.hpp"
#include "proxy3d/scene_io.hpp"

namespace proxy3d {

/// Read-only view of one flattened patch.
struct PatchTriplet {
  std::span<const double> feature;
  Vec3 point{};
  std::int32_t label = 0;
  std::uint32_t frame_index = 0;
  std::uint32_t patch_row = 0;
  std::uint32_t patch_col = 0;
  std::uint64_t global_index = 0;
};

/// Structure-of-arrays storage for flattened triplets; features are one
/// contiguous size() x channels() matrix in binary64.
class TripletSet {
 public:
  TripletSet() = default;
  explicit TripletSet(std::size_t channels) : channels_(channels) {}

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t channels() const { return channels_; }

  PatchTriplet operator[](std::size_t i) const;

  std::span<const double> feature(std::size_t i) const {
    return {features_.data() + i * channels_, channels_};
  }
  std::span<double> feature(std::size_t i) { return {features_.data() + i * channels_, channels_}; }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  std::int32_t label(std::size_t i) const { return labels_[i]; }
  std::uint64_t global_index(std::size_t i) const { return global_[i]; }

  std::span<const Vec3> points() const { return points_; }
  std::span<Vec3> points() { return points_; }
  std::span<const std::int32_t> labels() const { return labels_; }
  std::span<const std::uint64_t> global_indices() const { return global_; }

  void reserve(std::size_t n);
  void push_back(const PatchTriplet& t);
  /// Appends row i of another set with the same channel count.
  void push_back_from(const TripletSet& other, std::size_t i);
  void append(const TripletSet& other);

 private:
  std::size_t channels_ = 0;
  std::vector<double> features_;
  std::vector<Vec3> points_;
  std::vector<std::int32_t> labels_;
  std::vector<std::uint32_t> frame_;
  std::vector<std::uint32_t> row_;
  std::vector<std::uint32_t> col_;
  std::vector<std::uint64_t> global_;
};

/// Label covering the largest number of pixels; ties go to the smaller label.
/// Background (-1) competes like any other label.
std::int32_t dominant_label(std::span<const std::int32_t> patch_labels);

/// Mean of the finite points whose label equals `dominant`. Falls back to the
/// mean of all finite points, and returns nullopt if none are finite.
/// `patch_points` holds labels.size() xyz triples.
std::optional<Vec3> patch_point(std::span<const float> patch_points,
                                std::span<const std::int32_t> patch_labels, std::int32_t dominant);

/// Flattens every frame, dropping background and invalid-depth patches.
/// `patch_size` is the pixel edge q of a patch and is ignored for patch
/// bundles. Output is in ascending global index regardless of `threads`.
TripletSet flatten_scene(const SceneBundle& bundle, std::uint32_t patch_size, std::size_t threads = 1);

/// Patch size implied by a pixel bundle's dimensions (H / patch_h).
std::uint32_t implied_patch_size(const SceneBundle& bundle);

}  // namespace proxy3d
