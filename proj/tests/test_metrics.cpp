#include <gtest/gtest.h>

#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "hintqa/corpus.hpp"
#include "hintqa/errors.hpp"
#include "hintqa/metrics.hpp"
#include "test_support.hpp"

using namespace hintqa;
using nlohmann::json;

namespace {

// "n/d" or "n" as written in the fixture file.
double fraction(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

// Reference overlap: count matches by removing each matched gold token.
PRF brute_prf(std::vector<std::string> pred, std::vector<std::string> gold) {
  if (pred.empty() && gold.empty()) return {1, 1, 1};
  if (pred.empty() || gold.empty()) return {};
  std::size_t common = 0;
  for (const auto& t : pred) {
    for (auto it = gold.begin(); it != gold.end(); ++it) {
      if (*it == t) {
        gold.erase(it);
        ++common;
        break;
      }
    }
  }
  auto np = static_cast<double>(pred.size());
  auto ng = static_cast<double>(common + gold.size());
  if (common == 0) return {};
  auto c = static_cast<double>(common);
  return {c / np, c / ng, 2 * c / (np + ng)};
}

std::string random_phrase(std::mt19937& rng) {
  static const char* words[] = {"the", "a", "an", "cat", "Cat", "dog", "dog.", "new", "York",
                                "york", "city", "\"City\"", "of", "rock-n-roll", "1,000"};
  std::uniform_int_distribution<int> len(0, 5), pick(0, std::size(words) - 1);
  std::string s;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (!s.empty()) s += ' ';
    s += words[pick(rng)];
  }
  return s;
}

QAPrediction pred(std::string qid, Method m, Group g, Ordering o, std::string model,
                  std::string answer, std::vector<std::size_t> idx = {0, 1, 2}) {
  QAPrediction p;
  p.question_id = std::move(qid);
  p.passage = {m, g, o, std::move(idx)};
  p.model = std::move(model);
  p.answer = std::move(answer);
  return p;
}

Corpus china_corpus() {
  return Corpus({test::make_question("q1", "Which country?", "China", {"h0", "h1", "h2"}),
                 test::make_question("q2", "Who?", "Barack Obama", {"h0", "h1", "h2"})});
}

}  // namespace

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize("The Eiffel Tower."), "eiffel tower");
  EXPECT_EQ(normalize(""), "");
  EXPECT_EQ(normalize("China"), "china");
  EXPECT_EQ(normalize("  A   tale of\ttwo  cities "), "tale of two cities");
  EXPECT_EQ(normalize("Theatre"), "theatre");
}

TEST(Normalize, Idempotent) {
  std::mt19937 rng(11);
  for (int i = 0; i < 500; ++i) {
    auto s = random_phrase(rng);
    EXPECT_EQ(normalize(normalize(s)), normalize(s)) << s;
  }
}

TEST(ExactMatch, Examples) {
  EXPECT_EQ(exact_match("Barack Obama", {"Barack Obama", {}}), 1);
  EXPECT_EQ(exact_match("NO ANSWER", {"Barack Obama", {}}), 0);
  EXPECT_EQ(exact_match("NO ANSWER", {"China", {"PRC"}}), 0);
  EXPECT_EQ(exact_match("the China", {"China", {}}), 1);
  EXPECT_EQ(exact_match("PRC", {"China", {"PRC"}}), 1);
}

TEST(TokenPrf, Examples) {
  auto r = token_prf("Barack Obama", {"Obama", {}});
  EXPECT_EQ(r.precision, 0.5);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 2.0 / 3.0);
  auto same = token_prf("Mount Everest", {"Mount Everest", {}});
  EXPECT_EQ(same.f1, 1.0);
  auto none = token_prf("London", {"Paris", {}});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
}

TEST(MetricFixtures, HandComputedCasesMatchExactly) {
  auto cases = json::parse(test::slurp(test::data_path("metric_fixtures.json")));
  ASSERT_EQ(cases.size(), 25u);
  for (const auto& c : cases) {
    GoldAnswer gold{c.at("gold"), c.at("aliases").get<std::vector<std::string>>()};
    const std::string prediction = c.at("prediction");
    SCOPED_TRACE(c.at("name").get<std::string>());
    EXPECT_EQ(exact_match(prediction, gold), c.at("em").get<int>());
    auto prf = token_prf(prediction, gold);
    EXPECT_EQ(prf.precision, fraction(c.at("precision")));
    EXPECT_EQ(prf.recall, fraction(c.at("recall")));
    EXPECT_EQ(prf.f1, fraction(c.at("f1")));
  }
}

TEST(MetricProperties, EmImpliesF1AndBounds) {
  std::mt19937 rng(3);
  for (int i = 0; i < 2000; ++i) {
    auto p = random_phrase(rng);
    GoldAnswer g{random_phrase(rng), {}};
    if (i % 3 == 0) g.aliases.push_back(random_phrase(rng));
    auto s = score_prediction(p, g);
    for (double v : {s.em, s.precision, s.recall, s.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (s.em == 1.0) EXPECT_EQ(s.f1, 1.0) << p << " | " << g.text;
  }
}

TEST(MetricProperties, MatchesBruteForceMultisetOverlap) {
  std::mt19937 rng(5);
  for (int i = 0; i < 2000; ++i) {
    auto p = random_phrase(rng);
    auto g = random_phrase(rng);
    auto want = brute_prf(normalized_tokens(p), normalized_tokens(g));
    auto got = token_prf(p, {g, {}});
    EXPECT_NEAR(got.precision, want.precision, 1e-12) << p << " | " << g;
    EXPECT_NEAR(got.recall, want.recall, 1e-12) << p << " | " << g;
    EXPECT_NEAR(got.f1, want.f1, 1e-12) << p << " | " << g;
  }
}

TEST(MetricProperties, AddingAnAliasNeverLowersAMetric) {
  std::mt19937 rng(9);
  for (int i = 0; i < 1000; ++i) {
    auto p = random_phrase(rng);
    GoldAnswer g{random_phrase(rng), {}};
    auto before = score_prediction(p, g);
    auto alias = random_phrase(rng);
    if (normalize(alias) == normalize(g.text)) continue;
    g.aliases.push_back(alias);
    auto after = score_prediction(p, g);
    EXPECT_GE(after.em, before.em);
    EXPECT_GE(after.f1, before.f1);
  }
}

TEST(Aggregate, MeansAsPercentagesHighBeforeLow) {
  auto corpus = china_corpus();
  std::vector<QAPrediction> ps;
  // Low: EM [1,0] -> 50, High: EM [1,0,1,1] -> 75.
  ps.push_back(pred("q1", Method::Convergence, Group::Low, Ordering::Canonical, "m", "China"));
  ps.push_back(pred("q1", Method::Convergence, Group::Low, Ordering::Canonical, "m", "Japan"));
  for (auto a : {"China", "NO ANSWER", "china", "the China"}) {
    ps.push_back(pred("q1", Method::Convergence, Group::High, Ordering::Canonical, "m", a));
  }
  auto r = aggregate(ps, corpus);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_EQ(r.cells[0].group, Group::High);
  EXPECT_DOUBLE_EQ(r.cells[0].percent.em, 75.0);
  EXPECT_EQ(r.cells[0].count, 4u);
  EXPECT_EQ(r.cells[1].group, Group::Low);
  EXPECT_DOUBLE_EQ(r.cells[1].percent.em, 50.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Aggregate, PerQuestionAveragesQuestionMeans) {
  auto corpus = china_corpus();
  std::vector<QAPrediction> ps;
  // q1: three passages, all right (mean 1). q2: one passage, wrong (mean 0).
  for (int i = 0; i < 3; ++i) {
    ps.push_back(pred("q1", Method::Convergence, Group::High, Ordering::Canonical, "m", "China"));
  }
  ps.push_back(pred("q2", Method::Convergence, Group::High, Ordering::Canonical, "m", "Bush"));
  EXPECT_DOUBLE_EQ(aggregate(ps, corpus, AggregationUnit::Passage).cells[0].percent.em, 75.0);
  auto per_q = aggregate(ps, corpus, AggregationUnit::Question);
  EXPECT_DOUBLE_EQ(per_q.cells[0].percent.em, 50.0);
  EXPECT_EQ(per_q.cells[0].count, 2u);
}

TEST(Aggregate, CellOrderAndModelsInFirstAppearanceOrder) {
  auto corpus = china_corpus();
  std::vector<QAPrediction> ps;
  ps.push_back(pred("q1", Method::CosineSimilarity, Group::Low, Ordering::Canonical, "zeta", "x"));
  ps.push_back(pred("q1", Method::Convergence, Group::High, Ordering::Ascending, "alpha", "x"));
  ps.push_back(pred("q1", Method::Convergence, Group::High, Ordering::Descending, "zeta", "x"));
  auto r = aggregate(ps, corpus);
  EXPECT_EQ(r.models, (std::vector<std::string>{"zeta", "alpha"}));
  ASSERT_EQ(r.cells.size(), 3u);
  EXPECT_EQ(r.cells[0].ordering, Ordering::Descending);
  EXPECT_EQ(r.cells[1].ordering, Ordering::Ascending);
  EXPECT_EQ(r.cells[2].method, Method::CosineSimilarity);
}

TEST(Aggregate, ErrorOnlyCellOmittedWithWarning) {
  auto corpus = china_corpus();
  auto bad = pred("q1", Method::Convergence, Group::Low, Ordering::Canonical, "m", "");
  bad.error = "timeout";
  auto good = pred("q1", Method::Convergence, Group::High, Ordering::Canonical, "m", "China");
  auto r = aggregate({good, bad}, corpus);
  ASSERT_EQ(r.cells.size(), 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("low"), std::string::npos);
}

TEST(Aggregate, UnknownQuestionThrows) {
  auto corpus = china_corpus();
  EXPECT_THROW(aggregate({pred("q9", Method::Convergence, Group::High, Ordering::Canonical, "m",
                               "x")},
                         corpus),
               UnknownQuestion);
}
