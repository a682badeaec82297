#pragma once

// End-to-end scene compression: flatten -> group -> (reference) -> allocate
// -> cluster -> serialise -> (encode).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "proxy3d/proxyclust.hpp"
#include "proxy3d/scene_io.hpp"
#include "proxy3d/semgroup.hpp"
#include "proxy3d/serializer.hpp"

namespace proxy3d {

struct CompressConfig {
  std::size_t tokens = 450;
  std::size_t min_proxies = 1;
  std::map<std::int32_t, std::size_t> per_label_override;
  std::size_t edges = 3;
  bool posenc = true;
  /// Scene label -> identifier id injected before clustering.
  std::map<std::int32_t, std::size_t> refer;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Pixel edge of a patch for pixel bundles; defaults to H / patch_h.
  std::optional<std::uint32_t> patch_size;

  void validate() const;
};

/// Intermediate products, kept for inspection and tests.
struct CompressResult {
  ProxySequence sequence;
  AllocationPlan plan;
  std::vector<GroupCentroid> centroids;  // ascending label
  std::vector<std::int32_t> order;
  std::size_t patch_count = 0;  // L, before background removal
  std::size_t foreground_count = 0;
};

CompressResult compress_detailed(const SceneBundle& bundle, const CompressConfig& config);

inline ProxySequence compress(const SceneBundle& bundle, const CompressConfig& config) {
  return compress_detailed(bundle, config).sequence;
}

}  // namespace proxy3d
