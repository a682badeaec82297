#include "proxy3d/serializer.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include "proxy3d/error.hpp"

namespace proxy3d {

bool GroupGraph::has_edge(std::size_t a, std::size_t b) const {
  const auto& adj = adjacency.at(a);
  return std::binary_search(adj.begin(), adj.end(), b);
}

std::size_t GroupGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& adj : adjacency) n += adj.size();
  return n / 2;
}

std::vector<GroupCentroid> group_centroids(std::span<const std::vector<Proxy>> grouped) {
  std::vector<GroupCentroid> out;
  out.reserve(grouped.size());
  for (const auto& proxies : grouped) {
    if (proxies.empty()) throw Error(Errc::InvalidArgument, "group without proxies has no centroid");
    Vec3 sum{};
    for (const auto& p : proxies) {
      if (p.group_label != proxies.front().group_label) {
        throw Error(Errc::InvalidArgument, "mixed labels inside one proxy group");
      }
      sum = sum + p.coord;
    }
    out.push_back({proxies.front().group_label, (1.0 / static_cast<double>(proxies.size())) * sum});
  }
  return out;
}

namespace {

/// Node indices other than `from`, nearest first, ties to smaller label.
std::vector<std::size_t> by_distance_from(const std::vector<GroupCentroid>& nodes, const Vec3& from,
                                          std::size_t skip) {
  std::vector<std::size_t> idx;
  idx.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i != skip) idx.push_back(i);
  }
  std::vector<double> dist(nodes.size());
  for (std::size_t i : idx) dist[i] = squared_distance(nodes[i].centroid, from);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return nodes[a].label < nodes[b].label;
  });
  return idx;
}

}  // namespace

GroupGraph build_adjacency(std::vector<GroupCentroid> centroids, std::size_t k_edges) {
  if (k_edges == 0) throw Error(Errc::InvalidArgument, "k_edges must be at least 1");
  std::set<std::int32_t> labels;
  for (const auto& n : centroids) {
    if (!labels.insert(n.label).second) {
      throw Error(Errc::InvariantViolation, "duplicate node label " + std::to_string(n.label));
    }
  }
  GroupGraph g;
  g.nodes = std::move(centroids);
  const std::size_t n = g.nodes.size();
  std::vector<std::set<std::size_t>> edges(n);
  const std::size_t keep = n == 0 ? 0 : std::min(k_edges, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto order = by_distance_from(g.nodes, g.nodes[i].centroid, i);
    for (std::size_t j = 0; j < keep; ++j) {
      edges[i].insert(order[j]);
      edges[order[j]].insert(i);
    }
  }
  g.adjacency.reserve(n);
  for (const auto& e : edges) g.adjacency.emplace_back(e.begin(), e.end());
  return g;
}

std::vector<std::int32_t> bfs_order(const GroupGraph& graph) {
  const std::size_t n = graph.nodes.size();
  const auto roots = by_distance_from(graph.nodes, graph.origin, n);
  std::vector<bool> visited(n, false);
  std::vector<std::int32_t> order;
  order.reserve(n);
  std::deque<std::size_t> queue;

  for (std::size_t root : roots) {
    if (visited[root]) continue;
    visited[root] = true;
    queue.push_back(root);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      order.push_back(graph.nodes[u].label);
      std::vector<std::size_t> next;
      for (std::size_t v : graph.adjacency[u]) {
        if (!visited[v]) next.push_back(v);
      }
      const Vec3& here = graph.nodes[u].centroid;
      std::sort(next.begin(), next.end(), [&](std::size_t a, std::size_t b) {
        const double da = squared_distance(graph.nodes[a].centroid, here);
        const double db = squared_distance(graph.nodes[b].centroid, here);
        if (da != db) return da < db;
        return graph.nodes[a].label < graph.nodes[b].label;
      });
      for (std::size_t v : next) {
        visited[v] = true;
        queue.push_back(v);
      }
    }
  }
  return order;
}

ProxySequence assemble_sequence(std::span<const std::int32_t> order, std::span<const std::vector<Proxy>> grouped,
                                nlohmann::json meta) {
  std::map<std::int32_t, const std::vector<Proxy>*> by_label;
  for (const auto& proxies : grouped) {
    if (proxies.empty()) throw Error(Errc::InvalidArgument, "cannot serialise an empty group");
    if (!by_label.emplace(proxies.front().group_label, &proxies).second) {
      throw Error(Errc::InvalidArgument, "group label appears twice");
    }
  }
  {
    std::set<std::int32_t> seen;
    for (std::int32_t label : order) {
      if (!by_label.contains(label)) {
        throw Error(Errc::OrderMismatch, "order names unknown group " + std::to_string(label));
      }
      if (!seen.insert(label).second) {
        throw Error(Errc::OrderMismatch, "order repeats group " + std::to_string(label));
      }
    }
    if (seen.size() != by_label.size()) {
      throw Error(Errc::OrderMismatch, "order covers " + std::to_string(seen.size()) + " of " +
                                           std::to_string(by_label.size()) + " groups");
    }
  }

  ProxySequence seq;
  seq.channels = grouped.empty() ? 0 : static_cast<std::uint32_t>(grouped.front().front().feature.size());
  for (std::int32_t label : order) {
    std::vector<const Proxy*> ranked;
    for (const auto& p : *by_label.at(label)) ranked.push_back(&p);
    std::sort(ranked.begin(), ranked.end(), [](const Proxy* a, const Proxy* b) { return a->rank < b->rank; });
    Vec3 sum{};
    for (const Proxy* p : ranked) {
      if (p->feature.size() != seq.channels) throw Error(Errc::ShapeMismatch, "proxy channel counts differ");
      for (double v : p->feature) seq.tokens.push_back(static_cast<float>(v));
      for (double v : p->coord) seq.coords.push_back(static_cast<float>(v));
      seq.group_labels.push_back(label);
      sum = sum + p->coord;
    }
    const Vec3 centroid = (1.0 / static_cast<double>(ranked.size())) * sum;
    seq.group_table.push_back({label, static_cast<std::uint32_t>(ranked.size()),
                               {static_cast<float>(centroid[0]), static_cast<float>(centroid[1]),
                                static_cast<float>(centroid[2])}});
  }
  seq.k = static_cast<std::uint32_t>(seq.group_labels.size());
  seq.meta = std::move(meta);
  if (!seq.meta.is_object()) throw Error(Errc::InvalidArgument, "sequence meta must be a JSON object");
  return seq;
}

double adjacent_centroid_distance(std::span<const std::int32_t> order, std::span<const GroupCentroid> centroids) {
  if (order.size() < 2) return 0.0;
  std::map<std::int32_t, Vec3> at;
  for (const auto& c : centroids) at[c.label] = c.centroid;
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) total += distance(at.at(order[i - 1]), at.at(order[i]));
  return total / static_cast<double>(order.size() - 1);
}

}  // namespace proxy3d
