#include "proxy3d/patchgrid.hpp"

#include <algorithm>
#include <cmath>

#include "proxy3d/error.hpp"
#include "proxy3d/parallel.hpp"

namespace proxy3d {

PatchTriplet TripletSet::operator[](std::size_t i) const {
  return PatchTriplet{feature(i), points_[i], labels_[i], frame_[i], row_[i], col_[i], global_[i]};
}

void TripletSet::reserve(std::size_t n) {
  features_.reserve(n * channels_);
  points_.reserve(n);
  labels_.reserve(n);
  frame_.reserve(n);
  row_.reserve(n);
  col_.reserve(n);
  global_.reserve(n);
}

void TripletSet::push_back(const PatchTriplet& t) {
  if (t.feature.size() != channels_) {
    throw Error(Errc::ShapeMismatch, "triplet feature has " + std::to_string(t.feature.size()) +
                                         " channels, set holds " + std::to_string(channels_));
  }
  features_.insert(features_.end(), t.feature.begin(), t.feature.end());
  points_.push_back(t.point);
  labels_.push_back(t.label);
  frame_.push_back(t.frame_index);
  row_.push_back(t.patch_row);
  col_.push_back(t.patch_col);
  global_.push_back(t.global_index);
}

void TripletSet::push_back_from(const TripletSet& other, std::size_t i) {
  push_back(other[i]);
}

void TripletSet::append(const TripletSet& other) {
  if (other.channels_ != channels_) {
    throw Error(Errc::ShapeMismatch, "cannot append triplets with a different channel count");
  }
  features_.insert(features_.end(), other.features_.begin(), other.features_.end());
  points_.insert(points_.end(), other.points_.begin(), other.points_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  frame_.insert(frame_.end(), other.frame_.begin(), other.frame_.end());
  row_.insert(row_.end(), other.row_.begin(), other.row_.end());
  col_.insert(col_.end(), other.col_.begin(), other.col_.end());
  global_.insert(global_.end(), other.global_.begin(), other.global_.end());
}

std::int32_t dominant_label(std::span<const std::int32_t> patch_labels) {
  if (patch_labels.empty()) throw Error(Errc::InvalidArgument, "dominant_label on an empty patch");
  std::vector<std::int32_t> sorted(patch_labels.begin(), patch_labels.end());
  std::sort(sorted.begin(), sorted.end());
  std::int32_t best = sorted.front();
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    // Ascending scan with strict '>' keeps the smaller label on ties.
    if (j - i > best_count) {
      best = sorted[i];
      best_count = j - i;
    }
    i = j;
  }
  return best;
}

std::optional<Vec3> patch_point(std::span<const float> patch_points,
                                std::span<const std::int32_t> patch_labels, std::int32_t dominant) {
  if (patch_points.size() != patch_labels.size() * 3) {
    throw Error(Errc::ShapeMismatch, "patch points and labels disagree in size");
  }
  Vec3 dom_sum{}, all_sum{};
  std::size_t dom_n = 0, all_n = 0;
  for (std::size_t i = 0; i < patch_labels.size(); ++i) {
    const Vec3 p{patch_points[3 * i], patch_points[3 * i + 1], patch_points[3 * i + 2]};
    if (!is_finite(p)) continue;
    all_sum = all_sum + p;
    ++all_n;
    if (patch_labels[i] == dominant) {
      dom_sum = dom_sum + p;
      ++dom_n;
    }
  }
  if (dom_n > 0) return (1.0 / static_cast<double>(dom_n)) * dom_sum;
  if (all_n > 0) return (1.0 / static_cast<double>(all_n)) * all_sum;
  return std::nullopt;
}

std::uint32_t implied_patch_size(const SceneBundle& bundle) {
  if (bundle.granularity == Granularity::Patch || bundle.patch_h == 0) return 1;
  return bundle.height / bundle.patch_h;
}

namespace {

TripletSet flatten_frame(const SceneBundle& b, const FrameRecord& frame, std::uint32_t q) {
  const std::size_t C = b.channels;
  TripletSet out(C);
  out.reserve(b.patches_per_frame());
  const std::uint64_t frame_base = std::uint64_t{frame.frame_index} * b.patches_per_frame();
  std::vector<double> feature(C);
  std::vector<std::int32_t> labels(std::size_t{q} * q);
  std::vector<float> points(std::size_t{q} * q * 3);

  for (std::uint32_t r = 0; r < b.patch_h; ++r) {
    for (std::uint32_t c = 0; c < b.patch_w; ++c) {
      const std::size_t patch = std::size_t{r} * b.patch_w + c;
      std::int32_t label;
      std::optional<Vec3> point;
      if (b.granularity == Granularity::Patch) {
        label = frame.labels[patch];
        const float* p = &frame.points[3 * patch];
        point = Vec3{p[0], p[1], p[2]};
        if (!is_finite(*point)) point.reset();
      } else {
        for (std::uint32_t dy = 0; dy < q; ++dy) {
          for (std::uint32_t dx = 0; dx < q; ++dx) {
            const std::size_t pixel = (std::size_t{r} * q + dy) * b.width + std::size_t{c} * q + dx;
            const std::size_t k = std::size_t{dy} * q + dx;
            labels[k] = frame.labels[pixel];
            std::copy_n(&frame.points[3 * pixel], 3, &points[3 * k]);
          }
        }
        label = dominant_label(labels);
        if (label != kBackgroundLabel) point = patch_point(points, labels, label);
      }
      if (label == kBackgroundLabel || !point) continue;
      const float* f = &frame.features[patch * C];
      std::copy(f, f + C, feature.begin());
      out.push_back(PatchTriplet{feature, *point, label, frame.frame_index, r, c, frame_base + patch});
    }
  }
  return out;
}

}  // namespace

TripletSet flatten_scene(const SceneBundle& bundle, std::uint32_t patch_size, std::size_t threads) {
  bundle.validate();
  std::uint32_t q = 1;
  if (bundle.granularity == Granularity::Pixel) {
    q = patch_size;
    if (q == 0 || std::uint64_t{q} * bundle.patch_h != bundle.height ||
        std::uint64_t{q} * bundle.patch_w != bundle.width) {
      throw Error(Errc::GridMismatch, "patch size " + std::to_string(q) + " with " +
                                          std::to_string(bundle.patch_h) + "x" + std::to_string(bundle.patch_w) +
                                          " patches does not tile " + std::to_string(bundle.height) + "x" +
                                          std::to_string(bundle.width) + " pixels");
    }
  }
  std::vector<TripletSet> per_frame(bundle.frames.size());
  parallel_for(bundle.frames.size(), threads,
               [&](std::size_t i) { per_frame[i] = flatten_frame(bundle, bundle.frames[i], q); });

  TripletSet out(bundle.channels);
  std::size_t total = 0;
  for (const auto& f : per_frame) total += f.size();
  out.reserve(total);
  for (const auto& f : per_frame) out.append(f);
  return out;
}

}  // namespace proxy3d
