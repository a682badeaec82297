#include "proxy3d/scene_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "bytes.hpp"

namespace proxy3d {

using detail::add_sat;
using detail::ByteReader;
using detail::ByteWriter;
using detail::mul_sat;

namespace {

template <typename T>
bool bitwise_equal(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

std::uint64_t frame_bytes_for(Granularity g, std::uint32_t height, std::uint32_t width,
                              std::uint32_t patch_h, std::uint32_t patch_w,
                              std::uint32_t channels) {
  const std::uint64_t patches = mul_sat(patch_h, patch_w);
  const std::uint64_t cells = g == Granularity::Pixel ? mul_sat(height, width) : patches;
  std::uint64_t bytes = 4;
  bytes = add_sat(bytes, mul_sat(mul_sat(patches, channels), 4));
  bytes = add_sat(bytes, mul_sat(cells, 12));
  bytes = add_sat(bytes, mul_sat(cells, 4));
  return bytes;
}

void check_dimensions(Granularity g, std::uint32_t height, std::uint32_t width,
                      std::uint32_t patch_h, std::uint32_t patch_w, std::uint32_t channels) {
  if (channels == 0) throw Error(Errc::DimensionMismatch, "channel count must be at least 1");
  if (patch_h == 0 || patch_w == 0) throw Error(Errc::DimensionMismatch, "patch grid must be non-empty");
  if (g == Granularity::Pixel && (height == 0 || width == 0)) {
    throw Error(Errc::DimensionMismatch, "pixel bundles need non-zero H and W");
  }
}

}  // namespace

bool operator==(const FrameRecord& a, const FrameRecord& b) {
  return a.frame_index == b.frame_index && bitwise_equal(a.features, b.features) &&
         bitwise_equal(a.points, b.points) && a.labels == b.labels;
}

bool operator==(const GroupEntry& a, const GroupEntry& b) {
  return a.label == b.label && a.count == b.count &&
         std::memcmp(a.centroid.data(), b.centroid.data(), sizeof(a.centroid)) == 0;
}

bool operator==(const ProxySequence& a, const ProxySequence& b) {
  return a.k == b.k && a.channels == b.channels && bitwise_equal(a.tokens, b.tokens) &&
         bitwise_equal(a.coords, b.coords) && a.group_labels == b.group_labels &&
         a.group_table == b.group_table && a.meta == b.meta;
}

std::uint64_t SceneBundle::frame_bytes() const {
  return frame_bytes_for(granularity, height, width, patch_h, patch_w, channels);
}

void SceneBundle::validate() const {
  check_dimensions(granularity, height, width, patch_h, patch_w, channels);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameRecord& f = frames[i];
    const std::string where = "frame " + std::to_string(i);
    if (f.features.size() != feature_count()) {
      throw Error(Errc::DimensionMismatch, where + ": features hold " + std::to_string(f.features.size()) +
                                               " values, expected " + std::to_string(feature_count()));
    }
    if (f.points.size() != point_count() * 3) {
      throw Error(Errc::DimensionMismatch, where + ": points hold " + std::to_string(f.points.size()) +
                                               " values, expected " + std::to_string(point_count() * 3));
    }
    if (f.labels.size() != point_count()) {
      throw Error(Errc::DimensionMismatch, where + ": labels hold " + std::to_string(f.labels.size()) +
                                               " values, expected " + std::to_string(point_count()));
    }
    if (i > 0 && f.frame_index <= frames[i - 1].frame_index) {
      throw Error(Errc::InvariantViolation, where + ": frame indices must be strictly increasing");
    }
    for (std::int32_t label : f.labels) {
      if (label < kBackgroundLabel) {
        throw Error(Errc::InvariantViolation, where + ": label " + std::to_string(label) + " below -1");
      }
    }
    if (granularity == Granularity::Patch) {
      for (float v : f.points) {
        if (!std::isfinite(v)) {
          throw Error(Errc::InvariantViolation, where + ": non-finite point in a patch bundle");
        }
      }
    }
  }
}

std::uint64_t scene_file_size(Granularity granularity, std::uint32_t frames, std::uint32_t height,
                              std::uint32_t width, std::uint32_t patch_h, std::uint32_t patch_w,
                              std::uint32_t channels) {
  return add_sat(kSceneHeaderBytes,
                 mul_sat(frames, frame_bytes_for(granularity, height, width, patch_h, patch_w, channels)));
}

std::uint64_t token_file_size(std::uint32_t k, std::uint32_t channels, std::uint32_t groups,
                              std::uint32_t meta_len) {
  std::uint64_t bytes = kTokenHeaderBytes + std::uint64_t{meta_len};
  bytes = add_sat(bytes, mul_sat(groups, 20));
  bytes = add_sat(bytes, mul_sat(mul_sat(k, channels), 4));
  bytes = add_sat(bytes, mul_sat(k, 12));
  bytes = add_sat(bytes, mul_sat(k, 4));
  return bytes;
}

std::vector<std::uint8_t> encode_scene(const SceneBundle& bundle) {
  bundle.validate();
  ByteWriter w;
  w.reserve(static_cast<std::size_t>(
      scene_file_size(bundle.granularity, static_cast<std::uint32_t>(bundle.frames.size()), bundle.height,
                      bundle.width, bundle.patch_h, bundle.patch_w, bundle.channels)));
  w.magic("PX3D");
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(bundle.granularity));
  w.u32(static_cast<std::uint32_t>(bundle.frames.size()));
  w.u32(bundle.height);
  w.u32(bundle.width);
  w.u32(bundle.patch_h);
  w.u32(bundle.patch_w);
  w.u32(bundle.channels);
  for (const FrameRecord& f : bundle.frames) {
    w.u32(f.frame_index);
    w.array<float>(f.features);
    w.array<float>(f.points);
    w.array<std::int32_t>(f.labels);
  }
  return w.take();
}

SceneBundle decode_scene(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("PX3D");
  const std::size_t version_at = r.pos();
  if (const auto version = r.u32("version"); version != kContainerVersion) {
    throw Error(Errc::UnsupportedVersion, "PX3D version " + std::to_string(version), version_at);
  }
  const std::size_t flags_at = r.pos();
  const std::uint32_t flags = r.u32("flags");
  if ((flags & ~1u) != 0) {
    throw Error(Errc::UnsupportedVersion, "unknown flag bits set", flags_at);
  }
  SceneBundle b;
  b.granularity = (flags & 1u) ? Granularity::Patch : Granularity::Pixel;
  const std::uint32_t frame_count = r.u32("frame_count");
  b.height = r.u32("H");
  b.width = r.u32("W");
  b.patch_h = r.u32("patch_h");
  b.patch_w = r.u32("patch_w");
  b.channels = r.u32("C");
  check_dimensions(b.granularity, b.height, b.width, b.patch_h, b.patch_w, b.channels);

  // Frame storage grows only as payload bytes are actually present.
  b.frames.reserve(std::min<std::uint64_t>(frame_count, r.remaining() / b.frame_bytes() + 1));
  for (std::uint32_t i = 0; i < frame_count; ++i) {
    FrameRecord f;
    f.frame_index = r.u32("frame_index");
    f.features = r.array<float>(b.feature_count(), "features");
    f.points = r.array<float>(std::uint64_t{b.point_count()} * 3, "points");
    f.labels = r.array<std::int32_t>(b.point_count(), "labels");
    b.frames.push_back(std::move(f));
  }
  if (r.remaining() != 0) {
    throw Error(Errc::DimensionMismatch,
                std::to_string(r.remaining()) + " trailing bytes after declared frames", r.pos());
  }
  b.validate();
  return b;
}

std::vector<std::uint8_t> encode_tokens(const ProxySequence& seq) {
  seq.validate();
  const std::string meta = seq.meta.dump();
  ByteWriter w;
  w.reserve(static_cast<std::size_t>(token_file_size(seq.k, seq.channels,
                                                     static_cast<std::uint32_t>(seq.group_table.size()),
                                                     static_cast<std::uint32_t>(meta.size()))));
  w.magic("PXTK");
  w.u32(kContainerVersion);
  w.u32(seq.k);
  w.u32(seq.channels);
  w.u32(static_cast<std::uint32_t>(seq.group_table.size()));
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw({reinterpret_cast<const std::uint8_t*>(meta.data()), meta.size()});
  for (const GroupEntry& g : seq.group_table) {
    w.i32(g.label);
    w.u32(g.count);
    for (float c : g.centroid) w.f32(c);
  }
  w.array<float>(seq.tokens);
  w.array<float>(seq.coords);
  w.array<std::int32_t>(seq.group_labels);
  return w.take();
}

ProxySequence decode_tokens(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("PXTK");
  const std::size_t version_at = r.pos();
  if (const auto version = r.u32("version"); version != kContainerVersion) {
    throw Error(Errc::UnsupportedVersion, "PXTK version " + std::to_string(version), version_at);
  }
  ProxySequence s;
  s.k = r.u32("K");
  s.channels = r.u32("C");
  const std::uint32_t groups = r.u32("G");
  const std::uint32_t meta_len = r.u32("meta_len");
  const std::size_t meta_at = r.pos();
  const auto meta_bytes = r.raw(meta_len, "meta");
  try {
    s.meta = nlohmann::json::parse(meta_bytes.begin(), meta_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvariantViolation, std::string("meta is not valid JSON: ") + e.what(), meta_at);
  }
  if (!s.meta.is_object()) throw Error(Errc::InvariantViolation, "meta must be a JSON object", meta_at);

  r.require(mul_sat(groups, 20), "group table");
  s.group_table.resize(groups);
  for (GroupEntry& g : s.group_table) {
    g.label = r.i32("group label");
    g.count = r.u32("group count");
    for (float& c : g.centroid) c = r.f32("group centroid");
  }
  s.tokens = r.array<float>(mul_sat(s.k, s.channels), "tokens");
  s.coords = r.array<float>(mul_sat(s.k, 3), "coords");
  s.group_labels = r.array<std::int32_t>(s.k, "group_labels");
  if (r.remaining() != 0) {
    throw Error(Errc::DimensionMismatch, std::to_string(r.remaining()) + " trailing bytes", r.pos());
  }
  s.validate();
  return s;
}

void ProxySequence::validate() const {
  if (tokens.size() != std::size_t{k} * channels || coords.size() != std::size_t{k} * 3 ||
      group_labels.size() != k) {
    throw Error(Errc::DimensionMismatch, "token, coord and label arrays disagree with K=" + std::to_string(k));
  }
  std::uint64_t total = 0;
  std::size_t cursor = 0;
  for (const GroupEntry& g : group_table) {
    if (g.count == 0) {
      throw Error(Errc::InvariantViolation, "group " + std::to_string(g.label) + " has zero proxies");
    }
    total += g.count;
    if (total > k) break;
    for (std::uint32_t j = 0; j < g.count; ++j, ++cursor) {
      if (group_labels[cursor] != g.label) {
        throw Error(Errc::InvariantViolation,
                    "group_labels not contiguous in group-table order at token " + std::to_string(cursor));
      }
    }
  }
  if (total != k) {
    throw Error(Errc::InvariantViolation,
                "group table counts sum to " + std::to_string(total) + ", expected K=" + std::to_string(k));
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw Error(Errc::IoFailure, "cannot size " + path.string());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (!bytes.empty() && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw Error(Errc::IoFailure, "short read on " + path.string());
  }
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed on " + path.string());
}

std::string peek_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4)) return {};
  return std::string(magic, 4);
}

SceneBundle read_scene(const std::filesystem::path& path) { return decode_scene(read_file(path)); }

void write_scene(const SceneBundle& bundle, const std::filesystem::path& path) {
  write_file(path, encode_scene(bundle));
}

ProxySequence read_tokens(const std::filesystem::path& path) { return decode_tokens(read_file(path)); }

void write_tokens(const ProxySequence& seq, const std::filesystem::path& path) {
  write_file(path, encode_tokens(seq));
}

}  // namespace proxy3d
