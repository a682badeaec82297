#include "proxy3d/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "proxy3d/error.hpp"
#include "proxy3d/parallel.hpp"
#include "proxy3d/patchgrid.hpp"
#include "proxy3d/pipeline.hpp"
#include "proxy3d/posenc.hpp"
#include "proxy3d/refembed.hpp"
#include "proxy3d/scene_io.hpp"
#include "proxy3d/semgroup.hpp"
#include "proxy3d/synthgen.hpp"

namespace proxy3d::cli {

namespace {

/// Raised for argument problems that CLI11 validators cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t default_threads() {
  if (const char* env = std::getenv("PROXY3D_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return default_thread_count();
}

std::pair<std::uint32_t, std::uint32_t> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("no separator");
    std::size_t used = 0;
    const unsigned long h = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("junk");
    const std::string rest = text.substr(x + 1);
    const unsigned long w = std::stoul(rest, &used);
    if (used != rest.size() || h == 0 || w == 0) throw std::invalid_argument("junk");
    return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w)};
  } catch (const std::exception&) {
    throw UsageError("grid must look like 16x21, got '" + text + "'");
  }
}

/// "a=b" pairs; key and value parsed by the given callables.
template <typename K, typename V, typename PK, typename PV>
std::map<K, V> parse_pairs(const std::vector<std::string>& items, PK parse_key, PV parse_value,
                           const std::string& flag) {
  std::map<K, V> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError(flag + " expects KEY=VALUE, got '" + item + "'");
    try {
      out[parse_key(item.substr(0, eq))] = parse_value(item.substr(eq + 1));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception&) {
      throw UsageError(flag + " could not parse '" + item + "'");
    }
  }
  return out;
}

std::int32_t to_label(const std::string& s) {
  std::size_t used = 0;
  const long v = std::stol(s, &used);
  if (used != s.size() || v < 0) throw std::invalid_argument("label");
  return static_cast<std::int32_t>(v);
}

std::size_t to_count(const std::string& s) {
  std::size_t used = 0;
  const unsigned long v = std::stoul(s, &used);
  if (used != s.size() || s.starts_with('-')) throw std::invalid_argument("count");
  return v;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  }
}

nlohmann::json describe_tokens(const ProxySequence& seq) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : seq.group_table) {
    groups.push_back({{"label", g.label}, {"count", g.count}, {"centroid", g.centroid}});
  }
  return {{"k", seq.k}, {"c", seq.channels}, {"groups", groups}, {"meta", seq.meta}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"proxy3d: compile scene encoder outputs into compact 3D proxy token sequences", "proxy3d"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  // synth
  SceneSpec spec;
  std::string synth_out, synth_gt, synth_grid = "16x21";
  std::uint32_t synth_pixel_q = 0;
  std::size_t synth_threads = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic PX3D scene with ground truth");
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_option("--out", synth_out, "Output PX3D path")->required();
  synth->add_option("--gt", synth_gt, "Ground-truth JSON path (default: <out>.gt.json)");
  synth->add_option("--frames", spec.frames, "Number of frames")->check(CLI::PositiveNumber);
  synth->add_option("--grid", synth_grid, "Patch grid as HxW");
  synth->add_option("--channels", spec.channels, "Feature channels")->check(CLI::PositiveNumber);
  synth->add_option("--objects", spec.objects, "Number of boxes")->check(CLI::PositiveNumber);
  synth->add_option("--noise", spec.noise_std, "Feature noise deviation")->check(CLI::NonNegativeNumber);
  synth->add_option("--size", spec.height, "Image height and width in pixels (patch scenes)")
      ->check(CLI::PositiveNumber);
  synth->add_option("--pixel-q", synth_pixel_q, "Emit a pixel bundle with q x q pixels per patch");
  synth->add_option("--threads", synth_threads, "Worker threads");

  // compress
  CompressConfig cfg;
  std::string comp_in, comp_out;
  std::vector<std::string> overrides, refers;
  bool no_posenc = false;
  std::uint32_t comp_q = 0;
  std::size_t comp_threads = 0;
  auto* compress_cmd = app.add_subcommand("compress", "Compress a PX3D scene into a PXTK token sequence");
  compress_cmd->add_option("--in", comp_in, "Input PX3D path")->required();
  compress_cmd->add_option("--out", comp_out, "Output PXTK path")->required();
  compress_cmd->add_option("--tokens", cfg.tokens, "Token budget K")->check(CLI::PositiveNumber);
  compress_cmd->add_option("--min-proxies", cfg.min_proxies, "Minimum proxies per group")->check(CLI::PositiveNumber);
  compress_cmd->add_option("--override", overrides, "Per-label minimum, LABEL=N (repeatable)");
  compress_cmd->add_option("--edges", cfg.edges, "Neighbours per group in the BFS graph")->check(CLI::PositiveNumber);
  compress_cmd->add_flag("--no-posenc", no_posenc, "Skip 3D positional encoding");
  compress_cmd->add_option("--refer", refers, "Inject an identifier, OBJ007=LABEL (repeatable)");
  compress_cmd->add_option("--seed", cfg.seed, "Seed for encoder parameters and embeddings");
  compress_cmd->add_option("--q", comp_q, "Patch edge in pixels for pixel bundles");
  compress_cmd->add_option("--threads", comp_threads, "Worker threads (default: PROXY3D_THREADS or all cores)");

  // inspect
  std::string insp_in;
  bool insp_json = false;
  auto* inspect = app.add_subcommand("inspect", "Summarise a PXTK token file");
  inspect->add_option("--in", insp_in, "PXTK path")->required();
  inspect->add_flag("--json", insp_json, "Emit one JSON object");

  // stats
  std::string stats_in;
  bool stats_json = false;
  std::uint32_t stats_q = 0;
  auto* stats = app.add_subcommand("stats", "Per-label patch histogram of a PX3D scene");
  stats->add_option("--in", stats_in, "PX3D path")->required();
  stats->add_option("--q", stats_q, "Patch edge in pixels for pixel bundles");
  stats->add_flag("--json", stats_json, "Emit one JSON object");

  // align-train
  AlignConfig align;
  std::string align_out;
  auto* align_cmd = app.add_subcommand("align-train", "Train the positional encoding on coordinate regression");
  align_cmd->add_option("--steps", align.steps, "Adam steps");
  align_cmd->add_option("--lr", align.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  align_cmd->add_option("--batch", align.batch, "Batch size")->check(CLI::PositiveNumber);
  align_cmd->add_option("--samples", align.train_samples, "Training samples")->check(CLI::PositiveNumber);
  align_cmd->add_option("--eval-samples", align.eval_samples, "Held-out samples")->check(CLI::PositiveNumber);
  align_cmd->add_option("--channels", align.channels, "Feature channels (even)")->check(CLI::PositiveNumber);
  align_cmd->add_option("--seed", align.seed, "Random seed");
  align_cmd->add_option("--out", align_out, "Metrics JSON path (default: stdout)");

  // loss
  std::string loss_in;
  auto* loss = app.add_subcommand("loss", "Response-token negative log-likelihood of a PXLG file");
  loss->add_option("--in", loss_in, "PXLG path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("proxy3d");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    } else {
      err << app.help();
    }
    return kExitUsage;
  }

  try {
    if (*synth) {
      const auto [ph, pw] = parse_grid(synth_grid);
      spec.patch_h = ph;
      spec.patch_w = pw;
      spec.width = spec.height;
      if (synth_pixel_q > 0) {
        spec.granularity = Granularity::Pixel;
        spec.height = synth_pixel_q * ph;
        spec.width = synth_pixel_q * pw;
      }
      const std::size_t threads = synth_threads > 0 ? synth_threads : default_threads();
      const auto [bundle, truth] = generate_scene(spec, threads);
      write_scene(bundle, synth_out);
      write_ground_truth(truth, synth_gt.empty() ? synth_out + ".gt.json" : synth_gt);
      err << "synth: wrote " << bundle.frames.size() << " frames to " << synth_out << "\n";
    } else if (*compress_cmd) {
      cfg.posenc = !no_posenc;
      cfg.threads = comp_threads > 0 ? comp_threads : default_threads();
      if (comp_q > 0) cfg.patch_size = comp_q;
      cfg.per_label_override = parse_pairs<std::int32_t, std::size_t>(overrides, to_label, to_count, "--override");
      // --refer OBJ007=12: identifier token on the left, scene label on the right.
      for (const auto& item : refers) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--refer expects OBJxxx=LABEL, got '" + item + "'");
        std::string token = item.substr(0, eq);
        if (!token.starts_with('<')) token = "<" + token + ">";
        std::size_t id = 0;
        try {
          id = parse_object_token(token);
        } catch (const Error& e) {
          throw UsageError(std::string("--refer: ") + e.what());
        }
        try {
          cfg.refer[to_label(item.substr(eq + 1))] = id;
        } catch (const std::exception&) {
          throw UsageError("--refer label must be a non-negative integer in '" + item + "'");
        }
      }
      const auto t0 = std::chrono::steady_clock::now();
      const SceneBundle bundle = read_scene(comp_in);
      const CompressResult res = compress_detailed(bundle, cfg);
      write_tokens(res.sequence, comp_out);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      err << "compress: L=" << res.patch_count << " foreground=" << res.foreground_count
          << " groups=" << res.sequence.group_table.size() << " K=" << res.sequence.k << " ("
          << std::fixed << std::setprecision(1) << ms << " ms)\n";
    } else if (*inspect) {
      const std::string magic = peek_magic(insp_in);
      if (magic != "PXTK") {
        throw Error(Errc::BadMagic, "expected PXTK, found '" + magic + "' in " + insp_in, 0);
      }
      const ProxySequence seq = read_tokens(insp_in);
      if (insp_json) {
        out << describe_tokens(seq).dump() << "\n";
      } else {
        out << "K=" << seq.k << " C=" << seq.channels << " G=" << seq.group_table.size() << "\n";
        for (const auto& g : seq.group_table) {
          out << "  group " << g.label << ": " << g.count << " proxies, centroid (" << g.centroid[0] << ", "
              << g.centroid[1] << ", " << g.centroid[2] << ")\n";
        }
        out << "meta " << seq.meta.dump() << "\n";
      }
    } else if (*stats) {
      const SceneBundle bundle = read_scene(stats_in);
      const TripletSet triplets = flatten_scene(bundle, stats_q > 0 ? stats_q : implied_patch_size(bundle),
                                                default_threads());
      const auto groups = group_by_label(triplets);
      const std::size_t L = bundle.frames.size() * bundle.patches_per_frame();
      if (stats_json) {
        nlohmann::json hist = nlohmann::json::array();
        for (const auto& g : groups) hist.push_back({{"label", g.label}, {"count", g.members.size()}});
        out << nlohmann::json{{"frames", bundle.frames.size()},
                              {"patches", L},
                              {"foreground", triplets.size()},
                              {"groups", hist}}
                   .dump()
            << "\n";
      } else {
        out << "frames=" << bundle.frames.size() << " patches=" << L << " foreground=" << triplets.size()
            << " groups=" << groups.size() << "\n";
        for (const auto& g : groups) out << g.label << " " << g.members.size() << "\n";
      }
    } else if (*align_cmd) {
      const AlignMetrics m = train_coordinate_alignment(align);
      write_text(align_out, m.to_json().dump() + "\n", out);
      err << "align-train: eval mse " << m.final_eval_mse << ", r2 [" << m.r2[0] << ", " << m.r2[1] << ", "
          << m.r2[2] << "]\n";
    } else if (*loss) {
      const LossInput input = read_logits(loss_in);
      out << std::setprecision(17) << nll_loss(input) << "\n";
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace proxy3d::cli
