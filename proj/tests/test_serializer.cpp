#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "proxy3d/error.hpp"
#include "proxy3d/serializer.hpp"
#include "oracles.hpp"

using namespace proxy3d;

namespace {

Proxy proxy_at(std::int32_t label, Vec3 c, std::size_t rank = 0, double f = 0.0) {
  return {{f, -f}, c, label, rank, 1};
}

std::vector<GroupCentroid> line(std::initializer_list<double> xs) {
  std::vector<GroupCentroid> out;
  std::int32_t label = 0;
  for (double x : xs) out.push_back({label++, {x, 0, 0}});
  return out;
}

std::vector<GroupCentroid> random_centroids(std::mt19937_64& gen, std::size_t n) {
  std::vector<std::int32_t> labels(200);
  std::iota(labels.begin(), labels.end(), 0);
  std::shuffle(labels.begin(), labels.end(), gen);
  std::uniform_real_distribution<double> u(-4, 4);
  std::vector<GroupCentroid> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({labels[i], {u(gen), u(gen), u(gen)}});
  return out;
}

}  // namespace

TEST_CASE("group centroids") {
  const std::vector<std::vector<Proxy>> one{{proxy_at(4, {1, 2, 3})}};
  const auto c1 = group_centroids(one);
  CHECK(c1[0].label == 4);
  CHECK(c1[0].centroid == Vec3{1, 2, 3});

  const std::vector<std::vector<Proxy>> two{{proxy_at(0, {0, 0, 0}), proxy_at(0, {2, 2, 2}, 1)}};
  CHECK(group_centroids(two)[0].centroid == Vec3{1, 1, 1});

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<std::vector<Proxy>> random(1);
  long double sum[3] = {0, 0, 0};
  for (std::size_t r = 0; r < 37; ++r) {
    const Vec3 c{u(gen), u(gen), u(gen)};
    for (int a = 0; a < 3; ++a) sum[a] += c[a];
    random[0].push_back(proxy_at(1, c, r));
  }
  const auto cr = group_centroids(random)[0].centroid;
  for (int a = 0; a < 3; ++a) CHECK(std::abs(cr[a] - static_cast<double>(sum[a] / 37)) <= 1e-12);

  const std::vector<std::vector<Proxy>> mixed{{proxy_at(0, {0, 0, 0}), proxy_at(1, {0, 0, 0})}};
  CHECK_THROWS_AS(group_centroids(mixed), Error);
  const std::vector<std::vector<Proxy>> empty{{}};
  CHECK_THROWS_AS(group_centroids(empty), Error);
}

TEST_CASE("adjacency examples") {
  CHECK(build_adjacency(line({0}), 3).edge_count() == 0);
  const GroupGraph two = build_adjacency(line({0, 5}), 3);
  CHECK(two.edge_count() == 1);
  CHECK(two.has_edge(0, 1));

  const GroupGraph g = build_adjacency(line({0, 1, 2, 10}), 1);
  CHECK(g.edge_count() == 3);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
  CHECK(g.has_edge(2, 3));
  CHECK_FALSE(g.has_edge(0, 2));

  CHECK_THROWS_AS(build_adjacency(line({0, 1}), 0), Error);
  auto dup = line({0, 1});
  dup[1].label = 0;
  CHECK_THROWS_AS(build_adjacency(dup, 1), Error);
}

TEST_CASE("adjacency is symmetric, loop-free and at least k-NN") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 25)(gen);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 5)(gen);
    const GroupGraph g = build_adjacency(random_centroids(gen, n), k);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK_FALSE(g.has_edge(i, i));
      CHECK(g.adjacency[i].size() >= std::min(k, n - 1));
      CHECK(std::is_sorted(g.adjacency[i].begin(), g.adjacency[i].end()));
      for (std::size_t j : g.adjacency[i]) CHECK(g.has_edge(j, i));
    }
  }
}

TEST_CASE("bfs examples") {
  CHECK(bfs_order(build_adjacency({{42, {3, 3, 3}}}, 3)) == std::vector<std::int32_t>{42});
  // path a - b - c with a nearest the origin
  const std::vector<GroupCentroid> path{{7, {5, 0, 0}}, {3, {1, 0, 0}}, {9, {9, 0, 0}}};
  CHECK(bfs_order(build_adjacency(path, 1)) == std::vector<std::int32_t>{3, 7, 9});
  // two disconnected pairs; the far pair's nearer member still comes after the near pair
  const std::vector<GroupCentroid> pairs{{1, {100, 0, 0}}, {2, {101, 0, 0}}, {3, {-2, 0, 0}}, {4, {-3, 0, 0}}};
  CHECK(bfs_order(build_adjacency(pairs, 1)) == std::vector<std::int32_t>{3, 4, 1, 2});
  // neighbours are queued nearest first
  const std::vector<GroupCentroid> star{{0, {0, 0, 0}}, {1, {0, 0, 3}}, {2, {0, 2, 0}}, {3, {1, 0, 0}}};
  CHECK(bfs_order(build_adjacency(star, 3)) == std::vector<std::int32_t>{0, 3, 2, 1});
  CHECK(bfs_order(build_adjacency({}, 3)).empty());
}

TEST_CASE("bfs matches a reference traversal and is a permutation") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 30)(gen);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 4)(gen);
    auto nodes = random_centroids(gen, n);
    const GroupGraph g = build_adjacency(nodes, k);
    const auto order = bfs_order(g);
    CHECK(order == oracle::bfs(g));
    std::vector<std::int32_t> sorted = order, labels;
    for (const auto& c : nodes) labels.push_back(c.label);
    std::sort(sorted.begin(), sorted.end());
    std::sort(labels.begin(), labels.end());
    CHECK(sorted == labels);
    // independent of the order nodes are supplied in
    std::shuffle(nodes.begin(), nodes.end(), gen);
    CHECK(bfs_order(build_adjacency(nodes, k)) == order);
  }
}

TEST_CASE("bfs orders are more local than random orders on average") {
  // Breadth-first order can lose to a random order on individual layouts
  // (siblings of one node are emitted back to back), so this is an average.
  std::mt19937_64 gen(7);
  double bfs = 0, random = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto nodes = random_centroids(gen, 12);
    const auto order = bfs_order(build_adjacency(nodes, 3));
    bfs += adjacent_centroid_distance(order, nodes);
    std::vector<std::int32_t> perm = order;
    for (int r = 0; r < 200; ++r) {
      std::shuffle(perm.begin(), perm.end(), gen);
      random += adjacent_centroid_distance(perm, nodes) / 200;
    }
  }
  CHECK(bfs < random);
}

TEST_CASE("adjacent centroid distance") {
  const auto nodes = line({0, 1, 3});
  CHECK(adjacent_centroid_distance(std::vector<std::int32_t>{0, 1, 2}, nodes) == doctest::Approx(1.5));
  CHECK(adjacent_centroid_distance(std::vector<std::int32_t>{1, 0, 2}, nodes) == doctest::Approx(2.0));
  CHECK(adjacent_centroid_distance(std::vector<std::int32_t>{2}, nodes) == 0.0);
}

TEST_CASE("assemble sequence") {
  SUBCASE("one group keeps rank order") {
    const std::vector<std::vector<Proxy>> g{{proxy_at(5, {0, 0, 0}, 0, 1), proxy_at(5, {1, 0, 0}, 1, 2),
                                             proxy_at(5, {2, 0, 0}, 2, 3)}};
    const ProxySequence s = assemble_sequence(std::vector<std::int32_t>{5}, g);
    CHECK(s.k == 3);
    CHECK(s.channels == 2);
    CHECK(s.tokens == std::vector<float>{1, -1, 2, -2, 3, -3});
    CHECK(s.coords == std::vector<float>{0, 0, 0, 1, 0, 0, 2, 0, 0});
    REQUIRE(s.group_table.size() == 1);
    CHECK(s.group_table[0].count == 3);
    CHECK(s.group_table[0].centroid == std::array<float, 3>{1, 0, 0});
  }
  SUBCASE("groups follow the given order") {
    const std::vector<std::vector<Proxy>> g{{proxy_at(10, {0, 0, 0}), proxy_at(10, {1, 1, 1}, 1)},
                                            {proxy_at(20, {5, 5, 5})}};
    const ProxySequence s = assemble_sequence(std::vector<std::int32_t>{20, 10}, g, {{"note", "x"}});
    CHECK(s.group_labels == std::vector<std::int32_t>{20, 10, 10});
    CHECK(s.coords[0] == 5.0f);
    CHECK(s.meta.at("note") == "x");
    CHECK_NOTHROW(s.validate());
  }
  SUBCASE("order must be a permutation of the labels") {
    const std::vector<std::vector<Proxy>> g{{proxy_at(1, {0, 0, 0})}, {proxy_at(2, {0, 0, 0})}};
    for (const auto& bad : {std::vector<std::int32_t>{1}, std::vector<std::int32_t>{1, 1},
                            std::vector<std::int32_t>{1, 3}, std::vector<std::int32_t>{1, 2, 2}}) {
      try {
        assemble_sequence(bad, g);
        FAIL("expected OrderMismatch");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::OrderMismatch);
      }
    }
  }
}
