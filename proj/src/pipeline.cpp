#include "proxy3d/pipeline.hpp"

#include "proxy3d/error.hpp"
#include "proxy3d/patchgrid.hpp"
#include "proxy3d/posenc.hpp"
#include "proxy3d/refembed.hpp"

namespace proxy3d {

void CompressConfig::validate() const {
  if (tokens == 0) throw Error(Errc::InvalidArgument, "token budget must be at least 1");
  if (min_proxies == 0) throw Error(Errc::InvalidArgument, "minimum proxies per group must be at least 1");
  if (edges == 0) throw Error(Errc::InvalidArgument, "k_edges must be at least 1");
  for (const auto& [label, id] : refer) {
    if (id >= kIdentifierCount) throw Error(Errc::IndexOutOfRange, "identifier " + std::to_string(id) + " outside 0..99");
  }
}

namespace {

nlohmann::json make_meta(const CompressConfig& config) {
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto& [label, n] : config.per_label_override) overrides[std::to_string(label)] = n;
  nlohmann::json refer = nlohmann::json::object();
  for (const auto& [label, id] : config.refer) refer[object_token(id)] = label;
  return {{"version", kContainerVersion},
          {"requested_k", config.tokens},
          {"min_proxies", config.min_proxies},
          {"seed", config.seed},
          {"posenc", config.posenc},
          {"edges", config.edges},
          {"overrides", overrides},
          {"refer", refer}};
}

}  // namespace

CompressResult compress_detailed(const SceneBundle& bundle, const CompressConfig& config) {
  config.validate();
  CompressResult result;
  const std::uint32_t q = config.patch_size.value_or(implied_patch_size(bundle));
  const TripletSet triplets = flatten_scene(bundle, q, config.threads);
  result.patch_count = bundle.frames.size() * bundle.patches_per_frame();
  result.foreground_count = triplets.size();

  std::vector<SemanticGroup> groups = group_by_label(triplets);
  auto require_label = [&](std::int32_t label, const char* what) {
    for (const auto& g : groups) {
      if (g.label == label) return;
    }
    throw Error(Errc::InvalidArgument, std::string(what) + " names label " + std::to_string(label) +
                                           ", which has no patches in this scene");
  };
  for (const auto& [label, n] : config.per_label_override) require_label(label, "override");
  if (!config.refer.empty()) {
    const EmbeddingRegistry registry(config.seed, bundle.channels);
    for (const auto& [label, id] : config.refer) {
      require_label(label, "reference");
      for (auto& g : groups) {
        if (g.label == label) g = inject_identifier(std::move(g), registry, id);
      }
    }
  }

  const auto sizes = group_sizes(groups);
  result.plan = allocate_proxies(sizes, config.tokens, config.min_proxies, config.per_label_override);
  apply_allocation(groups, result.plan);

  const auto proxies = cluster_groups(groups, config.threads);
  result.centroids = group_centroids(proxies);
  const GroupGraph graph = build_adjacency(result.centroids, config.edges);
  result.order = bfs_order(graph);

  nlohmann::json meta = make_meta(config);
  meta["achieved_k"] = result.plan.achieved_k;
  result.sequence = assemble_sequence(result.order, proxies, std::move(meta));
  if (config.posenc && result.sequence.k > 0) {
    const PosEncParams params = init_posenc(bundle.channels, config.seed);
    const double z_min = encode_sequence(result.sequence, params);
    result.sequence.meta["z_min"] = z_min;
  }
  return result;
}

}  // namespace proxy3d
