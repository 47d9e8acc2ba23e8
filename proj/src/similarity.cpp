#include "hintqa/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "hintqa/errors.hpp"
#include "hintqa/gateway.hpp"
#include "hintqa/metrics.hpp"

namespace hintqa {
namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine: dimensions " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector();
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.model_tag != b.model_tag) {
    throw DimensionMismatch("cosine: model tags differ (" + a.model_tag + " vs " + b.model_tag +
                            ")");
  }
  return cosine(std::span<const double>(a.values), std::span<const double>(b.values));
}

std::vector<double> question_sentence_similarities(const Question& question, Gateway& gateway,
                                                   const std::string& model) {
  std::vector<std::string> texts;
  texts.reserve(question.hints.size() + 1);
  texts.push_back(question.text);
  texts.insert(texts.end(), question.hints.begin(), question.hints.end());
  auto vectors = gateway.embed(texts, model);

  EmbeddingVector q{std::move(vectors[0]), model};
  std::vector<double> sims;
  sims.reserve(question.hints.size());
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    sims.push_back(cosine(q, EmbeddingVector{std::move(vectors[i]), model}));
  }
  return sims;
}

std::vector<double> hash_embedding(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("hash_embedding: dim must be positive");
  std::vector<double> v(dim, 0.0);

  auto add = [&](std::string_view token) {
    std::uint64_t state = fnv1a(token, seed);
    for (auto& x : v) {
      // 53 random bits mapped to [-1, 1).
      x += static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
    }
  };

  auto tokens = normalized_tokens(text);
  if (tokens.empty()) {
    add(text);
  } else {
    for (const auto& t : tokens) add(t);
  }

  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    v[0] = 1.0;
    return v;
  }
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace hintqa
