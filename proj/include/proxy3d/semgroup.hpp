#pragma once

// Semantic grouping of triplets and apportionment of the proxy budget.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "proxy3d/patchgrid.hpp"

namespace proxy3d {

struct SemanticGroup {
  std::int32_t label = 0;
  TripletSet members;  // ascending global index
  std::size_t allocated = 0;
};

/// One group per distinct label, sorted by ascending label.
std::vector<SemanticGroup> group_by_label(const TripletSet& triplets);

struct GroupSize {
  std::int32_t label = 0;
  std::size_t size = 0;
};

struct GroupAllocation {
  std::int32_t label = 0;
  std::size_t group_size = 0;
  std::size_t allocated = 0;

  friend bool operator==(const GroupAllocation&, const GroupAllocation&) = default;
};

struct AllocationPlan {
  std::vector<GroupAllocation> groups;  // input order
  std::size_t requested_k = 0;
  std::size_t min_per_group = 1;
  std::size_t achieved_k = 0;
};

/// Splits a budget of `k` proxies across groups in proportion to their sizes.
///
/// Every group first receives min(k_min, size) proxies (`overrides` replaces
/// k_min per label). The rest is handed out one proxy at a time to the group
/// whose ideal share k*size/L exceeds its current allocation the most, never
/// beyond the group size; ties prefer the larger group, then the smaller
/// label. The result minimises sum |K_g - k*size_g/L| over all feasible
/// integer allocations, and also sum (K_g - k*size_g/L)^2.
///
/// Throws BudgetTooSmall when k cannot cover the per-group minimums.
AllocationPlan allocate_proxies(std::span<const GroupSize> groups, std::size_t k, std::size_t k_min = 1,
                                const std::map<std::int32_t, std::size_t>& overrides = {});

/// Copies allocated counts into matching groups (by label).
void apply_allocation(std::span<SemanticGroup> groups, const AllocationPlan& plan);

std::vector<GroupSize> group_sizes(std::span<const SemanticGroup> groups);

}  // namespace proxy3d
