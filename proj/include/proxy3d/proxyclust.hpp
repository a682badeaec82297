#pragma once

// Farthest-point center selection, nearest-center membership and mean
// pooling of each cluster into one proxy token.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "proxy3d/geometry.hpp"
#include "proxy3d/semgroup.hpp"

namespace proxy3d {

struct Proxy {
  std::vector<double> feature;  // mean of member features
  Vec3 coord{};                 // the center member's point
  std::int32_t group_label = 0;
  std::size_t rank = 0;  // FPS selection order inside the group
  std::size_t member_count = 0;
};

/// Greedy farthest point sampling. `points` must be ordered by ascending
/// global index: the first center is points[0], and ties on the max-min
/// distance go to the lower position. Returns positions in selection order.
/// Throws KOutOfRange unless 1 <= k <= points.size().
std::vector<std::size_t> fps_centers(std::span<const Vec3> points, std::size_t k);

/// Assigns each point to its nearest center (ties to the earlier center).
/// Centers always belong to their own cluster. Result is indexed by rank and
/// each cluster lists member positions in ascending order.
std::vector<std::vector<std::size_t>> assign_members(std::span<const Vec3> points,
                                                     std::span<const std::size_t> centers);

Proxy aggregate_proxy(const TripletSet& members, std::span<const std::size_t> cluster, std::size_t center,
                      std::int32_t label, std::size_t rank = 0);

/// fps_centers -> assign_members -> aggregate_proxy, proxies ordered by rank.
std::vector<Proxy> cluster_group(const SemanticGroup& group);

/// Clusters every group, possibly concurrently; output follows input order.
std::vector<std::vector<Proxy>> cluster_groups(std::span<const SemanticGroup> groups, std::size_t threads = 1);

}  // namespace proxy3d
