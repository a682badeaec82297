// pybind11 surface: scene arrays in and out, compression and token file
// inspection. Inputs must already be C-contiguous float32/int32; nothing is
// cast implicitly, so results match the CLI bit for bit.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <optional>

#include "proxy3d/error.hpp"
#include "proxy3d/pipeline.hpp"
#include "proxy3d/scene_io.hpp"

namespace py = pybind11;
using namespace proxy3d;

namespace {

template <typename T>
void require_array(const py::array& a, const char* name, py::ssize_t ndim) {
  if (!a.dtype().is(py::dtype::of<T>())) {
    throw py::type_error(std::string(name) + " must have dtype " + std::string(py::str(py::dtype::of<T>())) +
                         ", got " + std::string(py::str(a.dtype())));
  }
  if (!(a.flags() & py::array::c_style)) throw py::type_error(std::string(name) + " must be C-contiguous");
  if (a.ndim() != ndim) {
    throw Error(Errc::ShapeMismatch, std::string(name) + " must have " + std::to_string(ndim) + " axes, got " +
                                         std::to_string(a.ndim()));
  }
}

void require_axis(const py::array& a, const char* name, py::ssize_t axis, py::ssize_t expected, const char* what) {
  if (a.shape(axis) != expected) {
    throw Error(Errc::ShapeMismatch, std::string(name) + " axis " + std::to_string(axis) + " (" + what + ") has length " +
                                         std::to_string(a.shape(axis)) + ", expected " + std::to_string(expected));
  }
}

SceneBundle bundle_from_arrays(const py::array& features, const py::array& points, const py::array& labels,
                               const std::string& granularity, std::optional<py::array> frame_indices,
                               std::optional<std::pair<std::uint32_t, std::uint32_t>> image_size) {
  require_array<float>(features, "features", 4);
  require_array<float>(points, "points", 4);
  require_array<std::int32_t>(labels, "labels", 3);

  SceneBundle b;
  if (granularity == "patch") {
    b.granularity = Granularity::Patch;
  } else if (granularity == "pixel") {
    b.granularity = Granularity::Pixel;
  } else {
    throw py::value_error("granularity must be 'patch' or 'pixel', got '" + granularity + "'");
  }
  const py::ssize_t frames = features.shape(0);
  b.patch_h = static_cast<std::uint32_t>(features.shape(1));
  b.patch_w = static_cast<std::uint32_t>(features.shape(2));
  b.channels = static_cast<std::uint32_t>(features.shape(3));
  if (b.granularity == Granularity::Pixel) {
    b.height = static_cast<std::uint32_t>(points.shape(1));
    b.width = static_cast<std::uint32_t>(points.shape(2));
    if (image_size && (image_size->first != b.height || image_size->second != b.width)) {
      throw Error(Errc::ShapeMismatch, "image_size disagrees with the pixel point map");
    }
  } else {
    if (!image_size) throw py::value_error("image_size=(H, W) is required for patch bundles");
    b.height = image_size->first;
    b.width = image_size->second;
  }

  require_axis(points, "points", 0, frames, "frames");
  require_axis(points, "points", 1, b.point_rows(), "rows");
  require_axis(points, "points", 2, b.point_cols(), "cols");
  require_axis(points, "points", 3, 3, "xyz");
  for (py::ssize_t axis = 0; axis < 3; ++axis) {
    require_axis(labels, "labels", axis, points.shape(axis), axis == 0 ? "frames" : axis == 1 ? "rows" : "cols");
  }

  std::vector<std::uint32_t> indices;
  if (frame_indices) {
    require_array<std::uint32_t>(*frame_indices, "frame_indices", 1);
    require_axis(*frame_indices, "frame_indices", 0, frames, "frames");
    const auto* p = static_cast<const std::uint32_t*>(frame_indices->data());
    indices.assign(p, p + frames);
  } else {
    for (py::ssize_t f = 0; f < frames; ++f) indices.push_back(static_cast<std::uint32_t>(f));
  }

  const auto* fp = static_cast<const float*>(features.data());
  const auto* pp = static_cast<const float*>(points.data());
  const auto* lp = static_cast<const std::int32_t*>(labels.data());
  const std::size_t nf = b.feature_count(), np = b.point_count();
  b.frames.resize(static_cast<std::size_t>(frames));
  for (std::size_t f = 0; f < b.frames.size(); ++f) {
    FrameRecord& r = b.frames[f];
    r.frame_index = indices[f];
    r.features.assign(fp + f * nf, fp + (f + 1) * nf);
    r.points.assign(pp + f * np * 3, pp + (f + 1) * np * 3);
    r.labels.assign(lp + f * np, lp + (f + 1) * np);
  }
  return b;
}

template <typename T>
py::array_t<T> to_array(std::vector<py::ssize_t> shape, const std::vector<T>& data) {
  py::array_t<T> out(shape);
  if (!data.empty()) std::memcpy(out.mutable_data(), data.data(), data.size() * sizeof(T));
  return out;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict scene_to_dict(const SceneBundle& b) {
  const auto F = static_cast<py::ssize_t>(b.frames.size());
  std::vector<float> features, points;
  std::vector<std::int32_t> labels;
  std::vector<std::uint32_t> indices;
  for (const auto& r : b.frames) {
    features.insert(features.end(), r.features.begin(), r.features.end());
    points.insert(points.end(), r.points.begin(), r.points.end());
    labels.insert(labels.end(), r.labels.begin(), r.labels.end());
    indices.push_back(r.frame_index);
  }
  py::dict d;
  d["granularity"] = b.granularity == Granularity::Patch ? "patch" : "pixel";
  d["image_size"] = py::make_tuple(b.height, b.width);
  d["frame_indices"] = to_array<std::uint32_t>({F}, indices);
  d["features"] = to_array<float>({F, b.patch_h, b.patch_w, b.channels}, features);
  d["points"] = to_array<float>({F, b.point_rows(), b.point_cols(), 3}, points);
  d["labels"] = to_array<std::int32_t>({F, b.point_rows(), b.point_cols()}, labels);
  return d;
}

py::dict sequence_to_dict(const ProxySequence& s) {
  py::dict d;
  const auto K = static_cast<py::ssize_t>(s.k);
  d["tokens"] = to_array<float>({K, static_cast<py::ssize_t>(s.channels)}, s.tokens);
  d["coords"] = to_array<float>({K, 3}, s.coords);
  d["group_labels"] = to_array<std::int32_t>({K}, s.group_labels);
  d["meta"] = json_to_py(s.meta);
  return d;
}

ProxySequence run_compress(const SceneBundle& bundle, const CompressConfig& cfg,
                           const std::optional<std::filesystem::path>& out) {
  py::gil_scoped_release release;
  ProxySequence seq = compress(bundle, cfg);
  if (out) write_tokens(seq, *out);
  return seq;
}

CompressConfig make_config(std::size_t tokens, std::size_t min_proxies, std::map<std::int32_t, std::size_t> overrides,
                           std::size_t edges, bool posenc, std::map<std::int32_t, std::size_t> refer,
                           std::uint64_t seed, std::size_t threads, std::optional<std::uint32_t> q) {
  CompressConfig c;
  c.tokens = tokens;
  c.min_proxies = min_proxies;
  c.per_label_override = std::move(overrides);
  c.edges = edges;
  c.posenc = posenc;
  c.refer = std::move(refer);
  c.seed = seed;
  c.threads = threads;
  c.patch_size = q;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of proxy3d";
  py::register_exception<Error>(m, "Proxy3DError", PyExc_ValueError);

  m.def(
      "write_scene_from_arrays",
      [](const std::filesystem::path& path, const py::array& features, const py::array& points,
         const py::array& labels, const std::string& granularity, std::optional<py::array> frame_indices,
         std::optional<std::pair<std::uint32_t, std::uint32_t>> image_size) {
        const SceneBundle b = bundle_from_arrays(features, points, labels, granularity, frame_indices, image_size);
        py::gil_scoped_release release;
        write_scene(b, path);
      },
      py::arg("path"), py::arg("features"), py::arg("points"), py::arg("labels"), py::kw_only(),
      py::arg("granularity") = "patch", py::arg("frame_indices") = py::none(), py::arg("image_size") = py::none());

  m.def(
      "read_scene",
      [](const std::filesystem::path& path) {
        SceneBundle b;
        {
          py::gil_scoped_release release;
          b = read_scene(path);
        }
        return scene_to_dict(b);
      },
      py::arg("path"));

  m.def(
      "compress_file",
      [](const std::filesystem::path& path, std::size_t tokens, std::size_t min_proxies,
         std::map<std::int32_t, std::size_t> overrides, std::size_t edges, bool posenc,
         std::map<std::int32_t, std::size_t> refer, std::uint64_t seed, std::size_t threads,
         std::optional<std::uint32_t> q, std::optional<std::filesystem::path> out) {
        const CompressConfig cfg =
            make_config(tokens, min_proxies, std::move(overrides), edges, posenc, std::move(refer), seed, threads, q);
        SceneBundle b;
        {
          py::gil_scoped_release release;
          b = read_scene(path);
        }
        return sequence_to_dict(run_compress(b, cfg, out));
      },
      py::arg("path"), py::kw_only(), py::arg("tokens") = 450, py::arg("min_proxies") = 1,
      py::arg("overrides") = std::map<std::int32_t, std::size_t>{}, py::arg("edges") = 3, py::arg("posenc") = true,
      py::arg("refer") = std::map<std::int32_t, std::size_t>{}, py::arg("seed") = 0, py::arg("threads") = 1,
      py::arg("q") = py::none(), py::arg("out") = py::none());

  m.def(
      "compress_arrays",
      [](const py::array& features, const py::array& points, const py::array& labels, const std::string& granularity,
         std::optional<py::array> frame_indices, std::optional<std::pair<std::uint32_t, std::uint32_t>> image_size,
         std::size_t tokens, std::size_t min_proxies, std::map<std::int32_t, std::size_t> overrides,
         std::size_t edges, bool posenc, std::map<std::int32_t, std::size_t> refer, std::uint64_t seed,
         std::size_t threads, std::optional<std::uint32_t> q, std::optional<std::filesystem::path> out) {
        const CompressConfig cfg =
            make_config(tokens, min_proxies, std::move(overrides), edges, posenc, std::move(refer), seed, threads, q);
        const SceneBundle b = bundle_from_arrays(features, points, labels, granularity, frame_indices, image_size);
        return sequence_to_dict(run_compress(b, cfg, out));
      },
      py::arg("features"), py::arg("points"), py::arg("labels"), py::kw_only(), py::arg("granularity") = "patch",
      py::arg("frame_indices") = py::none(), py::arg("image_size") = py::none(), py::arg("tokens") = 450,
      py::arg("min_proxies") = 1, py::arg("overrides") = std::map<std::int32_t, std::size_t>{},
      py::arg("edges") = 3, py::arg("posenc") = true, py::arg("refer") = std::map<std::int32_t, std::size_t>{},
      py::arg("seed") = 0, py::arg("threads") = 1, py::arg("q") = py::none(), py::arg("out") = py::none());

  m.def(
      "inspect",
      [](const std::filesystem::path& path) {
        ProxySequence s;
        {
          py::gil_scoped_release release;
          if (peek_magic(path) != "PXTK") throw Error(Errc::BadMagic, "expected PXTK in " + path.string(), 0);
          s = read_tokens(path);
        }
        py::dict d = sequence_to_dict(s);
        py::list groups;
        for (const auto& g : s.group_table) {
          py::dict e;
          e["label"] = g.label;
          e["count"] = g.count;
          e["centroid"] = py::make_tuple(g.centroid[0], g.centroid[1], g.centroid[2]);
          groups.append(e);
        }
        d["groups"] = groups;
        return d;
      },
      py::arg("path"));
}
