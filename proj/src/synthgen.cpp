#include "proxy3d/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "proxy3d/error.hpp"
#include "proxy3d/parallel.hpp"
#include "proxy3d/patchgrid.hpp"
#include "proxy3d/random.hpp"
#include "proxy3d/refembed.hpp"

namespace proxy3d {

namespace {

constexpr double kHorizontalFov = 70.0 * std::numbers::pi / 180.0;
constexpr int kPlacementRetries = 500;
constexpr double kPlacementGap = 0.05;

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& a) { return (1.0 / std::sqrt(dot(a, a))) * a; }

struct Box {
  Vec3 lo, hi;
};

/// Entry distance of the ray into the box, or +inf if missed.
double intersect(const Box& box, const Vec3& origin, const Vec3& dir) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double near = (box.lo[a] - origin[a]) / dir[a];
    double far = (box.hi[a] - origin[a]) / dir[a];
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

struct Hit {
  std::int32_t label = kBackgroundLabel;
  Vec3 point{};
  bool finite = false;
};

Hit cast(const std::vector<Box>& boxes, const std::vector<ObjectTruth>& objects, const Vec3& origin,
         const Vec3& dir) {
  Hit hit;
  double best = std::numeric_limits<double>::infinity();
  if (dir[kVerticalAxis] < 0.0) {
    best = -origin[kVerticalAxis] / dir[kVerticalAxis];
    hit.finite = true;
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double t = intersect(boxes[i], origin, dir);
    if (t <= best && std::isfinite(t)) {
      best = t;
      hit.label = objects[i].label;
      hit.finite = true;
    }
  }
  if (hit.finite) hit.point = origin + best * dir;
  return hit;
}

CameraPose make_camera(const SceneSpec& spec, std::uint32_t frame) {
  const double phi = 2.0 * std::numbers::pi * frame / std::max<std::uint32_t>(spec.frames, 1);
  const double radius = 0.75 * std::max(spec.room_extent[0], spec.room_extent[1]);
  const double height = 0.75 * spec.room_extent[2];
  CameraPose cam;
  cam.position = {radius * std::cos(phi), radius * std::sin(phi), height};
  const Vec3 target{0.0, 0.0, 0.2 * spec.room_extent[2]};
  const Vec3 forward = normalized(target - cam.position);
  const Vec3 right = normalized(cross(forward, Vec3{0.0, 0.0, 1.0}));
  const Vec3 down = cross(forward, right);
  for (int r = 0; r < 3; ++r) {
    cam.rotation[3 * r + 0] = right[r];
    cam.rotation[3 * r + 1] = down[r];
    cam.rotation[3 * r + 2] = forward[r];
  }
  cam.fx = cam.fy = spec.width / (2.0 * std::tan(kHorizontalFov / 2.0));
  cam.cx = spec.width / 2.0;
  cam.cy = spec.height / 2.0;
  return cam;
}

std::vector<ObjectTruth> place_objects(const SceneSpec& spec) {
  rng::Stream stream(rng::mix({spec.seed, 0xB0C5}));
  std::vector<ObjectTruth> objects;
  const double ex = spec.room_extent[0], ey = spec.room_extent[1], ez = spec.room_extent[2];
  for (std::uint32_t i = 0; i < spec.objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      ObjectTruth o;
      o.label = static_cast<std::int32_t>(i);
      o.size = {stream.uniform(0.4, std::min(1.6, ex / 2)), stream.uniform(0.4, std::min(1.6, ey / 2)),
                stream.uniform(0.3, std::min(2.0, ez))};
      o.center = {stream.uniform(-ex / 2 + o.size[0] / 2, ex / 2 - o.size[0] / 2),
                  stream.uniform(-ey / 2 + o.size[1] / 2, ey / 2 - o.size[1] / 2), o.size[2] / 2};
      placed = std::none_of(objects.begin(), objects.end(), [&](const ObjectTruth& other) {
        return std::abs(o.center[0] - other.center[0]) < (o.size[0] + other.size[0]) / 2 + kPlacementGap &&
               std::abs(o.center[1] - other.center[1]) < (o.size[1] + other.size[1]) / 2 + kPlacementGap;
      });
      if (placed) {
        o.category = static_cast<std::uint32_t>(stream.below(kCategoryCount));
        o.visible_patches.assign(spec.frames, 0);
        objects.push_back(std::move(o));
      }
    }
    if (!placed) {
      throw Error(Errc::PlacementFailure, "could not place object " + std::to_string(i) + " after " +
                                              std::to_string(kPlacementRetries) + " attempts");
    }
  }
  return objects;
}

}  // namespace

void SceneSpec::validate() const {
  if (objects == 0) throw Error(Errc::InvalidArgument, "scene needs at least one object");
  if (channels == 0 || patch_h == 0 || patch_w == 0 || height == 0 || width == 0) {
    throw Error(Errc::InvalidArgument, "scene dimensions must be positive");
  }
  if (!(room_extent[0] > 0.0 && room_extent[1] > 0.0 && room_extent[2] > 0.0)) {
    throw Error(Errc::InvalidArgument, "room extent must be positive");
  }
  if (!(noise_std >= 0.0)) throw Error(Errc::InvalidArgument, "noise deviation must be non-negative");
  if (granularity == Granularity::Pixel &&
      (height % patch_h != 0 || width % patch_w != 0 || height / patch_h != width / patch_w)) {
    throw Error(Errc::GridMismatch, "pixel scenes need H and W to be the same multiple of the patch grid");
  }
}

std::uint64_t ObjectTruth::total_patches() const {
  std::uint64_t n = 0;
  for (auto v : visible_patches) n += v;
  return n;
}

Vec3 CameraPose::ray(double u, double v) const {
  const Vec3 local{(u - cx) / fx, (v - cy) / fy, 1.0};
  Vec3 world{};
  for (int r = 0; r < 3; ++r) {
    world[r] = rotation[3 * r] * local[0] + rotation[3 * r + 1] * local[1] + rotation[3 * r + 2] * local[2];
  }
  return normalized(world);
}

std::optional<std::array<double, 2>> CameraPose::project(const Vec3& world) const {
  const Vec3 rel = world - position;
  Vec3 local{};
  for (int c = 0; c < 3; ++c) {
    local[c] = rotation[c] * rel[0] + rotation[3 + c] * rel[1] + rotation[6 + c] * rel[2];
  }
  if (!(local[2] > 0.0)) return std::nullopt;
  return std::array<double, 2>{fx * local[0] / local[2] + cx, fy * local[1] / local[2] + cy};
}

std::pair<SceneBundle, GroundTruth> generate_scene(const SceneSpec& spec, std::size_t threads) {
  spec.validate();
  GroundTruth truth;
  truth.objects = place_objects(spec);
  std::vector<Box> boxes;
  for (const auto& o : truth.objects) boxes.push_back({o.center - 0.5 * o.size, o.center + 0.5 * o.size});
  for (std::uint32_t f = 0; f < spec.frames; ++f) truth.cameras.push_back(make_camera(spec, f));

  const EmbeddingRegistry registry(spec.seed, spec.channels);
  std::vector<std::vector<double>> prototypes;
  for (const auto& o : truth.objects) prototypes.push_back(registry.semantic_embedding(o.category));

  SceneBundle bundle;
  bundle.granularity = spec.granularity;
  bundle.height = spec.height;
  bundle.width = spec.width;
  bundle.patch_h = spec.patch_h;
  bundle.patch_w = spec.patch_w;
  bundle.channels = spec.channels;
  bundle.frames.resize(spec.frames);

  // Geometry is emitted relative to the first camera (axes stay z-up), the
  // frame a geometry predictor would report; the room is built around (0,0,0).
  const Vec3 origin = truth.cameras.empty() ? Vec3{} : truth.cameras.front().position;

  const bool pixel = spec.granularity == Granularity::Pixel;
  const std::uint32_t q = pixel ? spec.height / spec.patch_h : 1;
  const std::size_t patches = std::size_t{spec.patch_h} * spec.patch_w;
  std::vector<std::vector<std::uint32_t>> counts(spec.frames, std::vector<std::uint32_t>(truth.objects.size(), 0));

  parallel_for(spec.frames, threads, [&](std::size_t f) {
    const CameraPose& cam = truth.cameras[f];
    FrameRecord& rec = bundle.frames[f];
    rec.frame_index = static_cast<std::uint32_t>(f);
    const std::uint32_t rows = bundle.point_rows(), cols = bundle.point_cols();
    rec.points.resize(std::size_t{rows} * cols * 3);
    rec.labels.resize(std::size_t{rows} * cols);
    const double su = static_cast<double>(spec.width) / cols, sv = static_cast<double>(spec.height) / rows;
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        const std::size_t cell = std::size_t{r} * cols + c;
        const Hit hit = cast(boxes, truth.objects, cam.position, cam.ray((c + 0.5) * su, (r + 0.5) * sv));
        rec.labels[cell] = hit.label;
        const double fill = pixel ? std::numeric_limits<double>::quiet_NaN() : 0.0;
        for (int a = 0; a < 3; ++a) {
          rec.points[3 * cell + a] = static_cast<float>(hit.finite ? hit.point[a] - origin[a] : fill);
        }
      }
    }

    std::vector<std::int32_t> patch_labels(patches);
    if (pixel) {
      std::vector<std::int32_t> block(std::size_t{q} * q);
      for (std::uint32_t r = 0; r < spec.patch_h; ++r) {
        for (std::uint32_t c = 0; c < spec.patch_w; ++c) {
          for (std::uint32_t dy = 0; dy < q; ++dy) {
            for (std::uint32_t dx = 0; dx < q; ++dx) {
              block[std::size_t{dy} * q + dx] = rec.labels[(std::size_t{r} * q + dy) * spec.width + std::size_t{c} * q + dx];
            }
          }
          patch_labels[std::size_t{r} * spec.patch_w + c] = dominant_label(block);
        }
      }
    } else {
      patch_labels = rec.labels;
    }

    rec.features.resize(patches * spec.channels);
    for (std::size_t p = 0; p < patches; ++p) {
      const std::int32_t label = patch_labels[p];
      if (label >= 0) ++counts[f][static_cast<std::size_t>(label)];
      for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        const double proto = label >= 0 ? prototypes[static_cast<std::size_t>(label)][ch] : 0.0;
        const double noise = spec.noise_std * rng::gaussian(rng::mix({spec.seed, 0x4E015E, f, p, ch}));
        rec.features[p * spec.channels + ch] = static_cast<float>(proto + noise);
      }
    }
  });

  for (std::size_t f = 0; f < spec.frames; ++f) {
    for (std::size_t o = 0; o < truth.objects.size(); ++o) truth.objects[o].visible_patches[f] = counts[f][o];
  }
  for (auto& o : truth.objects) o.center = o.center - origin;
  for (auto& c : truth.cameras) c.position = c.position - origin;
  truth.floor_height = -origin[kVerticalAxis];
  return {std::move(bundle), std::move(truth)};
}

nlohmann::json GroundTruth::to_json() const {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : objects) {
    objs.push_back({{"label", o.label},
                    {"category", o.category},
                    {"center", o.center},
                    {"size", o.size},
                    {"visible_patches", o.visible_patches},
                    {"total_patches", o.total_patches()}});
  }
  nlohmann::json cams = nlohmann::json::array();
  for (const auto& c : cameras) {
    cams.push_back({{"position", c.position},
                    {"rotation", c.rotation},
                    {"fx", c.fx},
                    {"fy", c.fy},
                    {"cx", c.cx},
                    {"cy", c.cy}});
  }
  return {{"objects", objs}, {"cameras", cams}, {"floor_height", floor_height}};
}

GroundTruth GroundTruth::from_json(const nlohmann::json& j) {
  GroundTruth t;
  try {
    for (const auto& o : j.at("objects")) {
      ObjectTruth ob;
      ob.label = o.at("label").get<std::int32_t>();
      ob.category = o.at("category").get<std::uint32_t>();
      ob.center = o.at("center").get<Vec3>();
      ob.size = o.at("size").get<Vec3>();
      ob.visible_patches = o.at("visible_patches").get<std::vector<std::uint32_t>>();
      t.objects.push_back(std::move(ob));
    }
    for (const auto& c : j.at("cameras")) {
      CameraPose cam;
      cam.position = c.at("position").get<Vec3>();
      cam.rotation = c.at("rotation").get<std::array<double, 9>>();
      cam.fx = c.at("fx").get<double>();
      cam.fy = c.at("fy").get<double>();
      cam.cx = c.at("cx").get<double>();
      cam.cy = c.at("cy").get<double>();
      t.cameras.push_back(cam);
    }
    t.floor_height = j.at("floor_height").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("ground truth JSON: ") + e.what());
  }
  return t;
}

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  const std::string text = truth.to_json().dump(2) + "\n";
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return GroundTruth::from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, std::string("ground truth JSON: ") + e.what());
  }
}

SceneBundle perturb(const SceneBundle& bundle, const Perturbation& change) {
  SceneBundle out = bundle;
  if (const auto* t = std::get_if<Translate>(&change)) {
    for (auto& f : out.frames) {
      for (std::size_t i = 0; i < f.points.size(); ++i) {
        if (std::isfinite(f.points[i])) f.points[i] = static_cast<float>(double{f.points[i]} + t->offset[i % 3]);
      }
    }
  } else if (const auto* p = std::get_if<PermuteFrames>(&change)) {
    std::vector<bool> seen(bundle.frames.size(), false);
    if (p->order.size() != bundle.frames.size()) {
      throw Error(Errc::InvalidArgument, "frame permutation has the wrong length");
    }
    for (std::size_t k = 0; k < p->order.size(); ++k) {
      const std::size_t src = p->order[k];
      if (src >= seen.size() || seen[src]) throw Error(Errc::InvalidArgument, "frame order is not a permutation");
      seen[src] = true;
      out.frames[k] = bundle.frames[src];
      out.frames[k].frame_index = bundle.frames[k].frame_index;
    }
  } else if (const auto* d = std::get_if<DropFrame>(&change)) {
    if (d->position >= out.frames.size()) throw Error(Errc::IndexOutOfRange, "no frame at that position");
    out.frames.erase(out.frames.begin() + static_cast<std::ptrdiff_t>(d->position));
  }
  return out;
}

}  // namespace proxy3d
