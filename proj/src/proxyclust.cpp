#include "proxy3d/proxyclust.hpp"

#include <limits>

#include "proxy3d/error.hpp"
#include "proxy3d/parallel.hpp"

namespace proxy3d {

std::vector<std::size_t> fps_centers(std::span<const Vec3> points, std::size_t k) {
  const std::size_t n = points.size();
  if (k == 0 || k > n) {
    throw Error(Errc::KOutOfRange, "requested " + std::to_string(k) + " centers from " + std::to_string(n) + " points");
  }
  std::vector<std::size_t> centers;
  centers.reserve(k);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t current = 0;
  for (;;) {
    centers.push_back(current);
    chosen[current] = true;
    if (centers.size() == k) break;
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      const double d = squared_distance(points[i], points[current]);
      if (d < nearest[i]) nearest[i] = d;
      if (nearest[i] > best_dist) {
        best_dist = nearest[i];
        best = i;
      }
    }
    current = best;
  }
  return centers;
}

std::vector<std::vector<std::size_t>> assign_members(std::span<const Vec3> points,
                                                     std::span<const std::size_t> centers) {
  if (centers.empty()) throw Error(Errc::KOutOfRange, "assign_members needs at least one center");
  std::vector<std::ptrdiff_t> center_rank(points.size(), -1);
  for (std::size_t r = 0; r < centers.size(); ++r) {
    if (centers[r] >= points.size()) throw Error(Errc::IndexOutOfRange, "center index beyond point set");
    center_rank[centers[r]] = static_cast<std::ptrdiff_t>(r);
  }
  std::vector<std::vector<std::size_t>> clusters(centers.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t owner = 0;
    if (center_rank[i] >= 0) {
      owner = static_cast<std::size_t>(center_rank[i]);
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < centers.size(); ++r) {
        const double d = squared_distance(points[i], points[centers[r]]);
        if (d < best) {
          best = d;
          owner = r;
        }
      }
    }
    clusters[owner].push_back(i);
  }
  return clusters;
}

Proxy aggregate_proxy(const TripletSet& members, std::span<const std::size_t> cluster, std::size_t center,
                      std::int32_t label, std::size_t rank) {
  if (cluster.empty()) throw Error(Errc::InvalidArgument, "cannot aggregate an empty cluster");
  Proxy p;
  p.feature.assign(members.channels(), 0.0);
  for (std::size_t i : cluster) {
    const auto f = members.feature(i);
    for (std::size_t c = 0; c < f.size(); ++c) p.feature[c] += f[c];
  }
  const double inv = 1.0 / static_cast<double>(cluster.size());
  for (double& v : p.feature) v *= inv;
  p.coord = members.point(center);
  p.group_label = label;
  p.rank = rank;
  p.member_count = cluster.size();
  return p;
}

std::vector<Proxy> cluster_group(const SemanticGroup& group) {
  const auto points = group.members.points();
  const auto centers = fps_centers(points, group.allocated);
  const auto clusters = assign_members(points, centers);
  std::vector<Proxy> proxies;
  proxies.reserve(centers.size());
  for (std::size_t r = 0; r < centers.size(); ++r) {
    proxies.push_back(aggregate_proxy(group.members, clusters[r], centers[r], group.label, r));
  }
  return proxies;
}

std::vector<std::vector<Proxy>> cluster_groups(std::span<const SemanticGroup> groups, std::size_t threads) {
  std::vector<std::vector<Proxy>> out(groups.size());
  parallel_for(groups.size(), threads, [&](std::size_t i) { out[i] = cluster_group(groups[i]); });
  return out;
}

}  // namespace proxy3d
