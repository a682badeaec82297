#include <random>

#include "doctest.h"
#include "proxy3d/error.hpp"
#include "proxy3d/patchgrid.hpp"
#include "test_support.hpp"

using namespace proxy3d;

namespace {

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

/// Majority by explicit counting over the distinct labels, smallest label
/// first so ties keep it.
std::int32_t counting_oracle(const std::vector<std::int32_t>& labels) {
  std::int32_t best = 0;
  std::size_t best_count = 0;
  for (std::int32_t candidate = -1; candidate <= 10; ++candidate) {
    const auto n = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), candidate));
    if (n > best_count) {
      best = candidate;
      best_count = n;
    }
  }
  return best;
}

/// Pixel bundle whose patches are label-uniform, and the equivalent patch bundle.
std::pair<SceneBundle, SceneBundle> uniform_pair(std::mt19937_64& gen, std::uint32_t q) {
  SceneBundle patch;
  patch.granularity = Granularity::Patch;
  patch.patch_h = 3;
  patch.patch_w = 4;
  patch.channels = 2;
  patch.height = q * 3;
  patch.width = q * 4;
  SceneBundle pixel = patch;
  pixel.granularity = Granularity::Pixel;
  std::uniform_int_distribution<std::int32_t> label(-1, 3);
  std::uniform_real_distribution<float> v(-2.0f, 2.0f);
  for (std::uint32_t f = 0; f < 2; ++f) {
    FrameRecord pr, xr;
    pr.frame_index = xr.frame_index = f * 2;
    pr.features.resize(patch.feature_count());
    for (auto& x : pr.features) x = v(gen);
    xr.features = pr.features;
    pr.labels.resize(12);
    pr.points.resize(36);
    xr.labels.resize(std::size_t{pixel.height} * pixel.width);
    xr.points.resize(xr.labels.size() * 3);
    for (std::uint32_t r = 0; r < 3; ++r) {
      for (std::uint32_t c = 0; c < 4; ++c) {
        const std::size_t p = r * 4 + c;
        pr.labels[p] = label(gen);
        // Every pixel of the patch carries the same point, so the mean is exact.
        const float pt[3] = {v(gen), v(gen), v(gen)};
        std::copy(pt, pt + 3, &pr.points[3 * p]);
        for (std::uint32_t dy = 0; dy < q; ++dy) {
          for (std::uint32_t dx = 0; dx < q; ++dx) {
            const std::size_t px = (std::size_t{r} * q + dy) * pixel.width + c * q + dx;
            xr.labels[px] = pr.labels[p];
            std::copy(pt, pt + 3, &xr.points[3 * px]);
          }
        }
      }
    }
    patch.frames.push_back(pr);
    pixel.frames.push_back(xr);
  }
  return {pixel, patch};
}

}  // namespace

TEST_CASE("dominant label") {
  CHECK(dominant_label(std::vector<std::int32_t>{5, 5, 5, 5}) == 5);
  CHECK(dominant_label(std::vector<std::int32_t>{7, 7, 7, 2}) == 7);
  CHECK(dominant_label(std::vector<std::int32_t>{1, 1, 2, 2}) == 1);
  CHECK(dominant_label(std::vector<std::int32_t>{-1, -1, 4}) == -1);
  CHECK(dominant_label(std::vector<std::int32_t>{-1, 4}) == -1);
  CHECK_THROWS_AS(dominant_label(std::vector<std::int32_t>{}), Error);
}

TEST_CASE("dominant label agrees with a counting oracle") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::int32_t> label(-1, 10);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::int32_t> labels(std::uniform_int_distribution<int>(1, 16)(gen));
    for (auto& l : labels) l = label(gen);
    CHECK(dominant_label(labels) == counting_oracle(labels));
  }
}

TEST_CASE("patch point") {
  SUBCASE("single pixel") {
    const auto p = patch_point(std::vector<float>{1, 2, 3}, std::vector<std::int32_t>{4}, 4);
    REQUIRE(p);
    CHECK(*p == Vec3{1, 2, 3});
  }
  SUBCASE("mean over the dominant object's pixels only") {
    const std::vector<float> pts{0, 0, 0, 9, 9, 9, 2, 0, 0, -7, 5, 1};
    const auto p = patch_point(pts, std::vector<std::int32_t>{3, 1, 3, -1}, 3);
    REQUIRE(p);
    CHECK(*p == Vec3{1, 0, 0});
  }
  SUBCASE("non-finite dominant pixels are skipped") {
    const std::vector<float> pts{kNaN, 0, 0, 4, 4, 4};
    const auto p = patch_point(pts, std::vector<std::int32_t>{2, 2}, 2);
    REQUIRE(p);
    CHECK(*p == Vec3{4, 4, 4});
  }
  SUBCASE("falls back to all finite points") {
    const std::vector<float> pts{kNaN, kNaN, kNaN, 2, 4, 6, 0, 0, 0};
    const auto p = patch_point(pts, std::vector<std::int32_t>{2, 1, 1}, 2);
    REQUIRE(p);
    CHECK(*p == Vec3{1, 2, 3});
  }
  SUBCASE("all non-finite is invalid") {
    const std::vector<float> pts(12, kNaN);
    CHECK_FALSE(patch_point(pts, std::vector<std::int32_t>{1, 1, 1, 1}, 1).has_value());
  }
}

TEST_CASE("flatten a patch bundle re-indexes labelled patches") {
  SceneBundle b;
  b.granularity = Granularity::Patch;
  b.patch_h = b.patch_w = 2;
  b.channels = 2;
  b.height = b.width = 28;
  FrameRecord r;
  r.frame_index = 0;
  r.features = {0, 1, 2, 3, 4, 5, 6, 7};
  r.points = {0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0};
  r.labels = {4, 4, -1, 9};
  b.frames.push_back(r);
  const TripletSet t = flatten_scene(b, 14);
  REQUIRE(t.size() == 3);
  CHECK(t.global_index(0) == 0);
  CHECK(t.global_index(1) == 1);
  CHECK(t.global_index(2) == 3);
  CHECK(t.label(2) == 9);
  CHECK(t.point(2) == Vec3{3, 0, 0});
  CHECK(t.feature(2)[1] == 7.0);
  const PatchTriplet last = t[2];
  CHECK(last.patch_row == 1);
  CHECK(last.patch_col == 1);
}

TEST_CASE("global index uses the stored frame index") {
  std::mt19937_64 gen(1);
  auto [pixel, patch] = uniform_pair(gen, 2);
  const TripletSet t = flatten_scene(patch, 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const PatchTriplet p = t[i];
    CHECK(p.global_index == std::uint64_t{p.frame_index} * 12 + p.patch_row * 4 + p.patch_col);
    CHECK(p.label >= 0);
  }
}

TEST_CASE("pixel grid mismatch") {
  std::mt19937_64 gen(2);
  auto [pixel, patch] = uniform_pair(gen, 3);
  try {
    flatten_scene(pixel, 2);
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::GridMismatch);
  }
  SceneBundle odd = pixel;
  odd.height = 4;
  odd.patch_h = 1;
  odd.width = 12;
  odd.patch_w = 4;
  for (auto& f : odd.frames) {
    f.features.resize(odd.feature_count());
    f.points.resize(odd.point_count() * 3);
    f.labels.resize(odd.point_count());
  }
  try {
    flatten_scene(odd, 3);
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::GridMismatch);
  }
}

TEST_CASE("label-uniform pixel bundles flatten like their patch equivalent") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t q = 1 + trial % 4;
    auto [pixel, patch] = uniform_pair(gen, q);
    const TripletSet a = flatten_scene(pixel, q);
    const TripletSet b = flatten_scene(patch, 1);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.global_index(i) == b.global_index(i));
      CHECK(a.label(i) == b.label(i));
      CHECK(a.point(i) == b.point(i));
      CHECK(std::equal(a.feature(i).begin(), a.feature(i).end(), b.feature(i).begin()));
    }
  }
}

TEST_CASE("flatten output is strictly increasing and thread independent") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    const SceneBundle b = proxy3d::testing::random_bundle(gen, trial % 2 ? Granularity::Pixel : Granularity::Patch);
    const std::uint32_t q = implied_patch_size(b);
    const TripletSet one = flatten_scene(b, q, 1);
    const TripletSet four = flatten_scene(b, q, 4);
    REQUIRE(one.size() == four.size());
    CHECK(one.size() <= b.frames.size() * b.patches_per_frame());
    for (std::size_t i = 0; i < one.size(); ++i) {
      if (i > 0) CHECK(one.global_index(i) > one.global_index(i - 1));
      CHECK(one.global_index(i) == four.global_index(i));
      CHECK(one.label(i) >= 0);
      CHECK(is_finite(one.point(i)));
    }
  }
}
