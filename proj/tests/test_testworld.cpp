#include <gtest/gtest.h>

#include <algorithm>

#include "hintqa/convergence.hpp"
#include "hintqa/errors.hpp"
#include "hintqa/qa.hpp"
#include "hintqa/testworld.hpp"
#include "test_support.hpp"

using namespace hintqa;
using namespace hintqa::testworld;
using namespace std::chrono_literals;

namespace {

GatewayOptions no_cache() {
  GatewayOptions o;
  o.cache_dir.reset();
  o.retry.backoff = {0ms};
  return o;
}

ConvergenceOptions models() {
  ConvergenceOptions o;
  o.generation_model = "gen";
  o.judge_model = "judge";
  return o;
}

double score(const World& w, const Question& q, std::size_t hint) {
  Gateway gw(world_provider(w), no_cache());
  return score_hint(q, hint, gw, models()).score;
}

// Oracle straight from the world: related iff the gold holds the hint; the
// Yes count is the number of holders among the candidates.
double oracle(const World& w, const Question& q, std::size_t hint) {
  const auto* gold = w.find(q.answer.text);
  if (!gold->attributes.contains(q.hints[hint])) return 0.0;
  auto n = static_cast<double>(std::min(w.entities.size(), kMaxCandidates));
  auto v = static_cast<double>(w.holders(q.hints[hint]));
  return std::clamp(1.0 - (v - 1.0) / n, 0.0, 1.0);
}

}  // namespace

TEST(WorldProvider, FourEntityExamples) {
  World w;
  w.entities = {{"Alpha", {"unique to alpha", "everyone"}},
                {"Beta", {"everyone", "beta only"}},
                {"Gamma", {"everyone"}},
                {"Delta", {"everyone"}}};
  auto q = test::make_question("q", "Who?", "Alpha", {"unique to alpha", "everyone", "beta only"});
  w.gold_by_question[q.text] = "Alpha";
  EXPECT_EQ(score(w, q, 0), 1.0);
  EXPECT_DOUBLE_EQ(score(w, q, 1), 0.25);
  EXPECT_EQ(score(w, q, 2), 0.0);
}

TEST(WorldProvider, TwoEntityExamples) {
  World w;
  w.entities = {{"Left", {"only left", "both"}}, {"Right", {"both"}}};
  auto q = test::make_question("q", "Which side?", "Left", {"only left", "both"});
  w.gold_by_question[q.text] = "Left";
  EXPECT_EQ(score(w, q, 0), 1.0);
  EXPECT_DOUBLE_EQ(score(w, q, 1), 0.5);
}

TEST(WorldProvider, AnswersOnlyFromUniqueGoldFacts) {
  World w;
  w.entities = {{"Left", {"only left", "both"}}, {"Right", {"both", "only right"}}};
  auto q = test::make_question("q", "Which side?", "Left", {"only left", "both", "only right"});
  w.gold_by_question[q.text] = "Left";
  Gateway gw(world_provider(w), no_cache());
  QaOptions opts;
  auto ask = [&](std::string_view passage) {
    return gw.chat(build_prompt(passage, q, default_shots(), opts)).content;
  };
  EXPECT_EQ(ask("both\nonly left"), "Left");
  EXPECT_EQ(ask("both\nonly right"), std::string(kWrongAnswer));
}

TEST(WorldProvider, UnknownGoldEntity) {
  World w;
  w.entities = {{"Left", {"x"}}};
  w.gold_by_question["Q?"] = "Nowhere";
  EXPECT_THROW(world_provider(w), UnknownEntity);
}

TEST(GenerateWorld, SeedDeterminism) {
  auto a = generate_world(7, 12, 6);
  auto b = generate_world(7, 12, 6);
  auto c = generate_world(8, 12, 6);
  EXPECT_EQ(a.world, b.world);
  EXPECT_EQ(a.corpus, b.corpus);
  EXPECT_NE(a.corpus, c.corpus);
  EXPECT_EQ(a.corpus.size(), 12u);
  EXPECT_EQ(generate_world(7, 12, 6, 30).corpus.size(), 30u);
  EXPECT_THROW(generate_world(7, 1, 6), std::invalid_argument);
}

TEST(GenerateWorld, HintKindsPerQuestion) {
  for (std::size_t n : {2u, 3u, 8u, 20u}) {
    auto g = generate_world(n * 31, n, 5);
    for (const auto& q : g.corpus.questions()) {
      ASSERT_EQ(q.hints.size(), 9u);
      const auto* gold = g.world.find(q.answer.text);
      ASSERT_NE(gold, nullptr);
      std::size_t unique = 0, shared = 0, unrelated = 0;
      for (const auto& h : q.hints) {
        auto holders = g.world.holders(h);
        if (!gold->attributes.contains(h)) {
          ++unrelated;
        } else if (holders == 1) {
          ++unique;
        } else {
          ++shared;
          EXPECT_GE(holders - 1, (n + 1) / 2);
        }
      }
      EXPECT_EQ(unique, 3u);
      EXPECT_EQ(shared, 3u);
      EXPECT_EQ(unrelated, 3u);
    }
  }
}

TEST(GenerateWorld, PipelineScoresMatchWorldOracle) {
  auto g = generate_world(11, 10, 6);
  test::TempDir dir;
  Gateway gw(world_provider(g.world), no_cache());
  ScoreCorpusOptions opts{models(), dir / "conv.jsonl", false, 4};
  auto r = score_corpus(g.corpus, gw, opts);
  ASSERT_EQ(r.errors, 0u);
  ASSERT_EQ(r.records.size(), 90u);
  for (const auto& rec : r.records) {
    const auto& q = *g.corpus.find(rec.question_id);
    EXPECT_NEAR(rec.score, oracle(g.world, q, rec.hint_index), 1e-12);
    if (g.world.holders(q.hints[rec.hint_index]) == 1 && rec.related) EXPECT_EQ(rec.score, 1.0);
    if (g.world.holders(q.hints[rec.hint_index]) > 1 && rec.related) EXPECT_LE(rec.score, 0.5);
  }
}

TEST(WorldFile, RoundTrip) {
  auto g = generate_world(3, 5, 4);
  test::TempDir dir;
  save_world(g.world, dir / "world.json");
  EXPECT_EQ(load_world(dir / "world.json"), g.world);
  EXPECT_THROW(world_from_json(nlohmann::json::parse(R"({"entities":[]})")), Error);
}
