#include "proxy3d/semgroup.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "proxy3d/error.hpp"

namespace proxy3d {

std::vector<SemanticGroup> group_by_label(const TripletSet& triplets) {
  std::map<std::int32_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < triplets.size(); ++i) buckets[triplets.label(i)].push_back(i);

  std::vector<SemanticGroup> groups;
  groups.reserve(buckets.size());
  for (const auto& [label, rows] : buckets) {
    SemanticGroup g{label, TripletSet(triplets.channels()), 0};
    g.members.reserve(rows.size());
    for (std::size_t i : rows) g.members.push_back_from(triplets, i);
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<GroupSize> group_sizes(std::span<const SemanticGroup> groups) {
  std::vector<GroupSize> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back({g.label, g.members.size()});
  return out;
}

AllocationPlan allocate_proxies(std::span<const GroupSize> groups, std::size_t k, std::size_t k_min,
                                const std::map<std::int32_t, std::size_t>& overrides) {
  if (k_min == 0) throw Error(Errc::InvalidArgument, "minimum proxies per group must be at least 1");
  {
    std::set<std::int32_t> seen;
    for (const auto& g : groups) {
      if (!seen.insert(g.label).second) {
        throw Error(Errc::InvalidArgument, "duplicate group label " + std::to_string(g.label));
      }
    }
  }

  AllocationPlan plan;
  plan.requested_k = k;
  plan.min_per_group = k_min;
  plan.groups.reserve(groups.size());

  std::uint64_t total = 0;
  std::size_t reserved = 0;
  for (const auto& g : groups) {
    std::size_t floor = k_min;
    if (auto it = overrides.find(g.label); it != overrides.end()) floor = it->second;
    const std::size_t lo = std::min(floor, g.size);
    plan.groups.push_back({g.label, g.size, lo});
    total += g.size;
    reserved += lo;
  }
  if (reserved > k) {
    throw Error(Errc::BudgetTooSmall, "budget " + std::to_string(k) + " cannot cover " +
                                          std::to_string(reserved) + " reserved proxies across " +
                                          std::to_string(groups.size()) + " groups");
  }
  if (total == 0) return plan;
  constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  if (k > kMax / total) throw Error(Errc::InvalidArgument, "budget times total size overflows");

  // Deficit of group g, scaled by L to stay in integers: k*size_g - L*K_g.
  const auto L = static_cast<std::int64_t>(total);
  const auto K = static_cast<std::int64_t>(k);
  auto deficit = [&](std::size_t i) {
    const auto& a = plan.groups[i];
    return K * static_cast<std::int64_t>(a.group_size) - L * static_cast<std::int64_t>(a.allocated);
  };
  // Entry layout: (deficit, size, -label) compared lexicographically, largest first.
  using Entry = std::tuple<std::int64_t, std::size_t, std::int64_t, std::size_t>;
  std::priority_queue<Entry> heap;
  for (std::size_t i = 0; i < plan.groups.size(); ++i) {
    const auto& a = plan.groups[i];
    if (a.allocated < a.group_size) heap.emplace(deficit(i), a.group_size, -std::int64_t{a.label}, i);
  }
  for (std::size_t left = k - reserved; left > 0 && !heap.empty(); --left) {
    const std::size_t i = std::get<3>(heap.top());
    heap.pop();
    auto& a = plan.groups[i];
    ++a.allocated;
    if (a.allocated < a.group_size) heap.emplace(deficit(i), a.group_size, -std::int64_t{a.label}, i);
  }

  for (const auto& a : plan.groups) plan.achieved_k += a.allocated;
  return plan;
}

void apply_allocation(std::span<SemanticGroup> groups, const AllocationPlan& plan) {
  std::map<std::int32_t, std::size_t> by_label;
  for (const auto& a : plan.groups) by_label[a.label] = a.allocated;
  for (auto& g : groups) {
    auto it = by_label.find(g.label);
    if (it == by_label.end()) {
      throw Error(Errc::InvalidArgument, "no allocation for group " + std::to_string(g.label));
    }
    g.allocated = it->second;
  }
}

}  // namespace proxy3d
