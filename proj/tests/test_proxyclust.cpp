#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "proxy3d/error.hpp"
#include "proxy3d/proxyclust.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace proxy3d;
using proxy3d::testing::make_triplets;

namespace {

std::vector<Vec3> random_points(std::mt19937_64& gen, std::size_t n, bool lattice) {
  std::vector<Vec3> pts(n);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> cell(-3, 3);
  for (auto& p : pts) {
    for (auto& v : p) v = lattice ? cell(gen) : u(gen);
  }
  return pts;
}

SemanticGroup make_group(const std::vector<Vec3>& pts, std::size_t channels, std::size_t k, std::mt19937_64& gen) {
  return {3, make_triplets(pts, channels, gen, 3), k};
}

}  // namespace

TEST_CASE("fps examples") {
  std::vector<Vec3> line;
  for (int x = 0; x < 10; ++x) line.push_back({double(x), 0, 0});
  CHECK(fps_centers(line, 1) == std::vector<std::size_t>{0});
  CHECK(fps_centers(line, 3) == std::vector<std::size_t>{0, 9, 4});
  const auto all = fps_centers(line, 10);
  CHECK(all.front() == 0);
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 10);
  CHECK_THROWS_AS(fps_centers(line, 0), Error);
  CHECK_THROWS_AS(fps_centers(line, 11), Error);
}

TEST_CASE("fps matches the brute-force oracle") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 256)(gen);
    // Lattice points create many exact ties.
    const auto pts = random_points(gen, n, trial % 2 == 0);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(n, 40))(gen);
    CHECK(fps_centers(pts, k) == oracle::fps(pts, k));
  }
}

TEST_CASE("fps with duplicate points still returns distinct positions") {
  const std::vector<Vec3> pts(5, Vec3{1, 1, 1});
  const auto c = fps_centers(pts, 5);
  CHECK(c == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("assign members") {
  const std::vector<Vec3> pts{{0, 0, 0}, {10, 0, 0}, {4, 0, 0}, {5, 0, 0}};
  const std::vector<std::size_t> one{2};
  CHECK(assign_members(pts, one) == std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}});
  const std::vector<std::size_t> two{0, 1};
  CHECK(assign_members(pts, two) == std::vector<std::vector<std::size_t>>{{0, 2, 3}, {1}});
  const std::vector<std::size_t> swapped{1, 0};
  CHECK(assign_members(pts, swapped) == std::vector<std::vector<std::size_t>>{{1, 3}, {0, 2}});
}

TEST_CASE("coincident centers each keep themselves") {
  const std::vector<Vec3> pts{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
  const std::vector<std::size_t> centers{0, 1};
  const auto clusters = assign_members(pts, centers);
  CHECK(clusters == std::vector<std::vector<std::size_t>>{{0, 2}, {1}});
}

TEST_CASE("clusters partition the group") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 120)(gen);
    const auto pts = random_points(gen, n, trial % 3 == 0);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, n)(gen);
    const auto centers = fps_centers(pts, k);
    const auto clusters = assign_members(pts, centers);
    REQUIRE(clusters.size() == k);
    std::vector<int> seen(n, 0);
    for (std::size_t r = 0; r < k; ++r) {
      CHECK(std::find(clusters[r].begin(), clusters[r].end(), centers[r]) != clusters[r].end());
      CHECK(std::is_sorted(clusters[r].begin(), clusters[r].end()));
      for (std::size_t m : clusters[r]) {
        ++seen[m];
        // nearest-center rule
        for (std::size_t c : centers) CHECK(squared_distance(pts[m], pts[centers[r]]) <= squared_distance(pts[m], pts[c]));
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  }
}

TEST_CASE("aggregate proxy") {
  std::mt19937_64 gen(9);
  const std::vector<Vec3> pts{{1, 2, 3}, {4, 5, 6}};
  TripletSet t(3);
  const std::vector<double> zero(3, 0.0), two(3, 2.0);
  t.push_back({zero, pts[0], 1, 0, 0, 0, 0});
  t.push_back({two, pts[1], 1, 0, 0, 1, 1});

  const std::vector<std::size_t> single{1};
  const Proxy s = aggregate_proxy(t, single, 1, 1);
  CHECK(s.feature == two);
  CHECK(s.coord == pts[1]);
  CHECK(s.member_count == 1);

  const std::vector<std::size_t> both{0, 1};
  const Proxy p = aggregate_proxy(t, both, 0, 1, 4);
  CHECK(p.feature == std::vector<double>(3, 1.0));
  CHECK(p.coord == pts[0]);
  CHECK(p.rank == 4);
  CHECK(p.member_count == 2);

  std::vector<Vec3> five(5, Vec3{0, 0, 0});
  const TripletSet r = make_triplets(five, 16, gen);
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  const Proxy m = aggregate_proxy(r, all, 2, 0);
  for (std::size_t c = 0; c < 16; ++c) {
    long double sum = 0;
    for (std::size_t i = 0; i < 5; ++i) sum += r.feature(i)[c];
    CHECK(std::abs(m.feature[c] - static_cast<double>(sum / 5)) <= 1e-12);
  }
}

TEST_CASE("cluster group") {
  std::mt19937_64 gen(10);
  SUBCASE("single member") {
    const std::vector<Vec3> pts{{1, 1, 1}};
    const SemanticGroup g = make_group(pts, 4, 1, gen);
    const auto proxies = cluster_group(g);
    REQUIRE(proxies.size() == 1);
    CHECK(std::equal(proxies[0].feature.begin(), proxies[0].feature.end(), g.members.feature(0).begin()));
    CHECK(proxies[0].coord == pts[0]);
    CHECK(proxies[0].group_label == 3);
  }
  SUBCASE("full resolution returns the members in FPS order") {
    const auto pts = random_points(gen, 30, false);
    const SemanticGroup g = make_group(pts, 5, 30, gen);
    const auto proxies = cluster_group(g);
    const auto order = fps_centers(pts, 30);
    REQUIRE(proxies.size() == 30);
    for (std::size_t r = 0; r < 30; ++r) {
      CHECK(proxies[r].rank == r);
      CHECK(proxies[r].coord == pts[order[r]]);
      CHECK(std::equal(proxies[r].feature.begin(), proxies[r].feature.end(), g.members.feature(order[r]).begin()));
    }
  }
  SUBCASE("two separated blobs give one proxy each with the blob's mean feature") {
    TripletSet t(2);
    std::normal_distribution<double> jitter(0.0, 0.1);
    double sum[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < 40; ++i) {
      const int blob = i % 2;
      const Vec3 p{blob * 100.0 + jitter(gen), jitter(gen), jitter(gen)};
      const std::vector<double> f{blob + jitter(gen), -blob + jitter(gen)};
      sum[blob][0] += f[0];
      sum[blob][1] += f[1];
      t.push_back({f, p, 3, 0, 0, 0, i});
    }
    const auto proxies = cluster_group({3, t, 2});
    REQUIRE(proxies.size() == 2);
    // First center is member 0 (blob 0); the second must land in blob 1.
    CHECK(proxies[0].coord[0] < 50);
    CHECK(proxies[1].coord[0] > 50);
    for (int b = 0; b < 2; ++b) {
      CHECK(proxies[b].member_count == 20);
      CHECK(proxies[b].feature[0] == doctest::Approx(sum[b][0] / 20).epsilon(1e-12));
      CHECK(proxies[b].feature[1] == doctest::Approx(sum[b][1] / 20).epsilon(1e-12));
    }
  }
}

TEST_CASE("translation moves coordinates and nothing else") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> shift(-50, 50);
  for (int trial = 0; trial < 50; ++trial) {
    // Integer coordinates and shifts keep the arithmetic exact.
    const auto pts = random_points(gen, 60, true);
    const Vec3 t{std::round(shift(gen)), std::round(shift(gen)), std::round(shift(gen))};
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(p + t);
    std::mt19937_64 fa(trial), fb(trial);
    const auto a = cluster_group({0, make_triplets(pts, 4, fa), 9});
    const auto b = cluster_group({0, make_triplets(moved, 4, fb), 9});
    REQUIRE(a.size() == b.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
      CHECK(b[r].coord == a[r].coord + t);
      CHECK(b[r].feature == a[r].feature);
      CHECK(b[r].member_count == a[r].member_count);
      CHECK(b[r].rank == a[r].rank);
    }
  }
}

TEST_CASE("cluster_groups emits the allocated total regardless of threads") {
  std::mt19937_64 gen(13);
  std::vector<SemanticGroup> groups;
  std::size_t total = 0;
  for (int g = 0; g < 9; ++g) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 80)(gen);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, n)(gen);
    groups.push_back({g, make_triplets(random_points(gen, n, false), 3, gen, g), k});
    total += k;
  }
  const auto one = cluster_groups(groups, 1);
  const auto many = cluster_groups(groups, 8);
  std::size_t emitted = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    REQUIRE(one[g].size() == groups[g].allocated);
    emitted += one[g].size();
    for (std::size_t r = 0; r < one[g].size(); ++r) {
      CHECK(one[g][r].feature == many[g][r].feature);
      CHECK(one[g][r].coord == many[g][r].coord);
      CHECK(one[g][r].group_label == groups[g].label);
    }
  }
  CHECK(emitted == total);
}
