#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hintqa/errors.hpp"
#include "hintqa/gateway.hpp"
#include "hintqa/similarity.hpp"
#include "test_support.hpp"

using namespace hintqa;

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine(EmbeddingVector{{0.3, -2, 5}, "m"}, EmbeddingVector{{0.3, -2, 5}, "m"}),
                   1.0);
  EXPECT_EQ(cosine(EmbeddingVector{{1, 0}, "m"}, EmbeddingVector{{0, 1}, "m"}), 0.0);
  EXPECT_DOUBLE_EQ(cosine(EmbeddingVector{{1, 1}, "m"}, EmbeddingVector{{2, 2}, "m"}), 1.0);
  EXPECT_DOUBLE_EQ(cosine(EmbeddingVector{{1, 0}, "m"}, EmbeddingVector{{-3, 0}, "m"}), -1.0);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine(EmbeddingVector{{1, 0}, "m"}, EmbeddingVector{{1, 0, 0}, "m"}),
               DimensionMismatch);
  EXPECT_THROW(cosine(EmbeddingVector{{1, 0}, "m"}, EmbeddingVector{{1, 0}, "other"}),
               DimensionMismatch);
  EXPECT_THROW(cosine(EmbeddingVector{{0, 0}, "m"}, EmbeddingVector{{1, 0}, "m"}), ZeroVector);
}

TEST(Cosine, SymmetryScaleInvarianceAndBounds) {
  std::mt19937 rng(1);
  std::normal_distribution<double> d;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    double ab = cosine(a, b);
    EXPECT_EQ(ab, cosine(b, a));
    std::vector<double> scaled = a;
    double lambda = std::exp(d(rng));
    for (auto& x : scaled) x *= lambda;
    EXPECT_NEAR(cosine(scaled, b), ab, 1e-12);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(HashEmbedding, DeterministicUnitVectors) {
  auto a = hash_embedding("Its capital is Beijing.");
  auto b = hash_embedding("Its capital is Beijing.");
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 64u);
  double norm = 0;
  for (double x : a) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_NE(a, hash_embedding("Its population is more than 1 billion."));
  EXPECT_EQ(hash_embedding("x", 16).size(), 16u);
}

TEST(HashEmbedding, SharedWordsRaiseSimilarity) {
  auto q = hash_embedding("which country has the capital beijing");
  auto near = hash_embedding("its capital is beijing");
  auto far = hash_embedding("he painted a famous ceiling");
  EXPECT_GT(cosine(q, near), cosine(q, far));
}

TEST(QuestionSimilarities, OnePerHintInOrder) {
  auto p = std::make_shared<ScriptedProvider>();
  p->fallback_embedder([](std::string_view t) { return hash_embedding(t, 32); });
  Gateway gw(p);
  std::vector<std::string> hints;
  for (int i = 0; i < 9; ++i) hints.push_back("hint number " + std::to_string(i));
  hints[4] = "Which country borders 14 others?";
  auto q = test::make_question("q1", "Which country borders 14 others?", "China", hints);
  auto sims = question_sentence_similarities(q, gw, "hash");
  ASSERT_EQ(sims.size(), 9u);
  EXPECT_NEAR(sims[4], 1.0, 1e-12);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(sims[i], cosine(hash_embedding(q.text, 32), hash_embedding(hints[i], 32)));
  }
  EXPECT_EQ(gw.provider_calls(), 1u);
  EXPECT_EQ(question_sentence_similarities(q, gw, "hash"), sims);
}
