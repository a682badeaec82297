#pragma once

// Object referencing: deterministic identifier/semantic embeddings, additive
// fusion, identifier injection into semantic groups, <OBJxxx> tokens and the
// response-token negative log-likelihood.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxy3d/semgroup.hpp"

namespace proxy3d {

inline constexpr std::size_t kIdentifierCount = 100;
inline constexpr std::size_t kCategoryCount = 213;

enum class EmbeddingKind : std::uint64_t {
  Identifier = 0x4944,  // "ID"
  Semantic = 0x5345,    // "SE"
};

/// Unit-norm vectors expanded from (seed, kind, index, lane) with splitmix64:
/// lane value = 2*u - 1 where u takes the top 53 bits of
/// mix(seed, kind, index, lane), then the vector is L2-normalised.
class EmbeddingRegistry {
 public:
  EmbeddingRegistry(std::uint64_t seed, std::size_t channels);

  std::uint64_t seed() const { return seed_; }
  std::size_t channels() const { return channels_; }

  /// Throws IndexOutOfRange for id >= 100.
  std::vector<double> identifier_embedding(std::size_t id) const;
  /// Throws IndexOutOfRange for category >= 213.
  std::vector<double> semantic_embedding(std::size_t category) const;

  static std::vector<double> expand(std::uint64_t seed, EmbeddingKind kind, std::uint64_t index,
                                    std::size_t channels);

 private:
  std::uint64_t seed_;
  std::size_t channels_;
};

/// Elementwise sum; throws ShapeMismatch on length mismatch.
std::vector<double> fuse(std::span<const double> sem, std::span<const double> id);

/// Adds `embedding` to every member feature. Geometry is untouched.
SemanticGroup inject_identifier(SemanticGroup group, std::span<const double> embedding);
SemanticGroup inject_identifier(SemanticGroup group, const EmbeddingRegistry& registry, std::size_t id);

/// "<OBJ%03d>"; throws IndexOutOfRange for id >= 100.
std::string object_token(std::size_t id);
/// Exact inverse of object_token; anything else throws ParseError.
std::size_t parse_object_token(std::string_view text);

struct LossInput {
  std::size_t vocab = 0;
  std::vector<double> logits;  // r_total x vocab, row-major
  std::vector<std::int32_t> targets;
  std::size_t prefix_len = 0;

  std::size_t r_total() const { return targets.size(); }
};

/// -sum over positions prefix_len..r_total-1 of log softmax(logits_i)[t_i],
/// natural log with log-sum-exp stabilisation. Throws ShapeMismatch.
double nll_loss(const LossInput& input);

/// PXLG: "PXLG" | V u32 | r_total u32 | prefix u32 | logits f32[r_total*V] | targets i32[r_total]
std::vector<std::uint8_t> encode_logits(const LossInput& input);
LossInput decode_logits(std::span<const std::uint8_t> bytes);
LossInput read_logits(const std::filesystem::path& path);
void write_logits(const LossInput& input, const std::filesystem::path& path);

}  // namespace proxy3d
