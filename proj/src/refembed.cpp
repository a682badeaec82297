#include "proxy3d/refembed.hpp"

#include <cmath>
#include <limits>

#include "bytes.hpp"
#include "proxy3d/error.hpp"
#include "proxy3d/random.hpp"
#include "proxy3d/scene_io.hpp"

namespace proxy3d {

EmbeddingRegistry::EmbeddingRegistry(std::uint64_t seed, std::size_t channels) : seed_(seed), channels_(channels) {
  if (channels == 0) throw Error(Errc::InvalidArgument, "embedding registry needs at least one channel");
}

std::vector<double> EmbeddingRegistry::expand(std::uint64_t seed, EmbeddingKind kind, std::uint64_t index,
                                              std::size_t channels) {
  std::vector<double> v(channels);
  double norm2 = 0.0;
  for (std::size_t lane = 0; lane < channels; ++lane) {
    v[lane] = rng::to_symmetric(rng::mix({seed, static_cast<std::uint64_t>(kind), index, lane}));
    norm2 += v[lane] * v[lane];
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<double> EmbeddingRegistry::identifier_embedding(std::size_t id) const {
  if (id >= kIdentifierCount) {
    throw Error(Errc::IndexOutOfRange, "identifier " + std::to_string(id) + " outside 0..99");
  }
  return expand(seed_, EmbeddingKind::Identifier, id, channels_);
}

std::vector<double> EmbeddingRegistry::semantic_embedding(std::size_t category) const {
  if (category >= kCategoryCount) {
    throw Error(Errc::IndexOutOfRange, "category " + std::to_string(category) + " outside 0..212");
  }
  return expand(seed_, EmbeddingKind::Semantic, category, channels_);
}

std::vector<double> fuse(std::span<const double> sem, std::span<const double> id) {
  if (sem.size() != id.size()) throw Error(Errc::ShapeMismatch, "fused embeddings differ in length");
  std::vector<double> out(sem.size());
  for (std::size_t i = 0; i < sem.size(); ++i) out[i] = sem[i] + id[i];
  return out;
}

SemanticGroup inject_identifier(SemanticGroup group, std::span<const double> embedding) {
  if (embedding.size() != group.members.channels()) {
    throw Error(Errc::ShapeMismatch, "identifier embedding length differs from feature channels");
  }
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    auto f = group.members.feature(i);
    for (std::size_t c = 0; c < f.size(); ++c) f[c] += embedding[c];
  }
  return group;
}

SemanticGroup inject_identifier(SemanticGroup group, const EmbeddingRegistry& registry, std::size_t id) {
  const auto embedding = registry.identifier_embedding(id);
  return inject_identifier(std::move(group), embedding);
}

std::string object_token(std::size_t id) {
  if (id >= kIdentifierCount) {
    throw Error(Errc::IndexOutOfRange, "identifier " + std::to_string(id) + " outside 0..99");
  }
  std::string digits = std::to_string(id);
  return "<OBJ" + std::string(3 - digits.size(), '0') + digits + ">";
}

std::size_t parse_object_token(std::string_view text) {
  constexpr std::string_view prefix = "<OBJ";
  if (text.size() != 8 || !text.starts_with(prefix) || text.back() != '>') {
    throw Error(Errc::ParseError, "not an <OBJxxx> token: '" + std::string(text) + "'");
  }
  std::size_t id = 0;
  for (char ch : text.substr(4, 3)) {
    if (ch < '0' || ch > '9') throw Error(Errc::ParseError, "non-digit in '" + std::string(text) + "'");
    id = id * 10 + static_cast<std::size_t>(ch - '0');
  }
  if (id >= kIdentifierCount) {
    throw Error(Errc::ParseError, "identifier in '" + std::string(text) + "' outside 0..99");
  }
  return id;
}

namespace {

void check_loss_input(const LossInput& in) {
  if (in.vocab == 0) throw Error(Errc::ShapeMismatch, "vocabulary must be non-empty");
  if (in.logits.size() != in.r_total() * in.vocab) {
    throw Error(Errc::ShapeMismatch, "logits hold " + std::to_string(in.logits.size()) + " values, expected " +
                                         std::to_string(in.r_total() * in.vocab));
  }
  if (in.prefix_len >= in.r_total()) {
    throw Error(Errc::ShapeMismatch, "prefix length " + std::to_string(in.prefix_len) +
                                         " must be below sequence length " + std::to_string(in.r_total()));
  }
  for (std::int32_t t : in.targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= in.vocab) {
      throw Error(Errc::ShapeMismatch, "target " + std::to_string(t) + " outside vocabulary");
    }
  }
}

}  // namespace

double nll_loss(const LossInput& in) {
  check_loss_input(in);
  double total = 0.0;
  for (std::size_t i = in.prefix_len; i < in.r_total(); ++i) {
    const double* row = in.logits.data() + i * in.vocab;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < in.vocab; ++v) peak = std::max(peak, row[v]);
    double sum = 0.0;
    for (std::size_t v = 0; v < in.vocab; ++v) sum += std::exp(row[v] - peak);
    total += peak + std::log(sum) - row[in.targets[i]];
  }
  return total;
}

std::vector<std::uint8_t> encode_logits(const LossInput& in) {
  check_loss_input(in);
  detail::ByteWriter w;
  w.magic("PXLG");
  w.u32(static_cast<std::uint32_t>(in.vocab));
  w.u32(static_cast<std::uint32_t>(in.r_total()));
  w.u32(static_cast<std::uint32_t>(in.prefix_len));
  std::vector<float> logits(in.logits.begin(), in.logits.end());
  w.array<float>(logits);
  w.array<std::int32_t>(in.targets);
  return w.take();
}

LossInput decode_logits(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("PXLG");
  LossInput in;
  in.vocab = r.u32("V");
  const std::uint32_t r_total = r.u32("r_total");
  in.prefix_len = r.u32("prefix");
  const auto logits = r.array<float>(detail::mul_sat(r_total, in.vocab), "logits");
  in.logits.assign(logits.begin(), logits.end());
  in.targets = r.array<std::int32_t>(r_total, "targets");
  if (r.remaining() != 0) {
    throw Error(Errc::DimensionMismatch, std::to_string(r.remaining()) + " trailing bytes", r.pos());
  }
  check_loss_input(in);
  return in;
}

LossInput read_logits(const std::filesystem::path& path) { return decode_logits(read_file(path)); }

void write_logits(const LossInput& input, const std::filesystem::path& path) {
  write_file(path, encode_logits(input));
}

}  // namespace proxy3d
