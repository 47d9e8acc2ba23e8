#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hintqa/corpus.hpp"

namespace hintqa {

class Gateway;

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_tag;
};

/// dot(a,b) / (|a| |b|), clamped to [-1, 1].
/// Throws DimensionMismatch (length or model tag) or ZeroVector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine(std::span<const double> a, std::span<const double> b);

/// cosine(question, hint_i) for every hint, in hint order. Embeds the question
/// and all hints in one batch through the gateway.
std::vector<double> question_sentence_similarities(const Question& question, Gateway& gateway,
                                                   const std::string& model);

/// Deterministic pseudo-embedding for offline runs: unit vector whose
/// entries are derived from seeded hashes of the text's tokens, so texts
/// sharing words point in similar directions. Identical text gives an
/// identical vector on every platform.
std::vector<double> hash_embedding(std::string_view text, std::size_t dim = 64,
                                   std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

}  // namespace hintqa
