#pragma once

// Orders semantic groups by breadth-first traversal of a spatial k-NN graph
// over their centroids and concatenates their proxies into one sequence.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "proxy3d/geometry.hpp"
#include "proxy3d/proxyclust.hpp"
#include "proxy3d/scene_io.hpp"

namespace proxy3d {

struct GroupCentroid {
  std::int32_t label = 0;
  Vec3 centroid{};
};

struct GroupGraph {
  std::vector<GroupCentroid> nodes;
  std::vector<std::vector<std::size_t>> adjacency;  // sorted node indices, symmetric
  Vec3 origin{0.0, 0.0, 0.0};

  bool has_edge(std::size_t a, std::size_t b) const;
  std::size_t edge_count() const;
};

/// Mean proxy coordinate of each group. Every inner list must be non-empty
/// and hold a single label.
std::vector<GroupCentroid> group_centroids(std::span<const std::vector<Proxy>> grouped);

/// Connects each node to its min(k_edges, G-1) nearest neighbours (distance
/// ties to the smaller label) and symmetrises by union.
GroupGraph build_adjacency(std::vector<GroupCentroid> centroids, std::size_t k_edges);

/// Breadth-first order of group labels. The root is the node nearest the
/// origin; neighbours are queued by ascending distance from the node being
/// expanded; exhausted components restart from the unvisited node nearest
/// the origin. All ties go to the smaller label.
std::vector<std::int32_t> bfs_order(const GroupGraph& graph);

/// Concatenates groups in `order`, proxies by rank within each group.
/// Throws OrderMismatch unless `order` is a permutation of the group labels.
ProxySequence assemble_sequence(std::span<const std::int32_t> order, std::span<const std::vector<Proxy>> grouped,
                                nlohmann::json meta = nlohmann::json::object());

/// Mean distance between centroids of sequence-adjacent groups.
double adjacent_centroid_distance(std::span<const std::int32_t> order, std::span<const GroupCentroid> centroids);

}  // namespace proxy3d
