// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <latch>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "hintqa/config.hpp"
#include "hintqa/convergence.hpp"
#include "hintqa/errors.hpp"
#include "hintqa/gateway.hpp"
#include "hintqa/metrics.hpp"
#include "hintqa/pipeline.hpp"
#include "hintqa/qa.hpp"
#include "hintqa/similarity.hpp"
#include "hintqa/subsets.hpp"
#include "hintqa/testworld.hpp"
#include "test_support.hpp"

using namespace hintqa;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

GatewayOptions no_cache() {
  GatewayOptions o;
  o.cache_dir.reset();
  o.retry.backoff = {0ms};
  return o;
}

std::string after(const std::string& text, const std::string& label) {
  auto pos = text.find(label);
  if (pos == std::string::npos) return {};
  auto start = pos + label.size();
  return text.substr(start, text.find('\n', start) - start);
}

/// Judge answering from tables; relatedness prompts carry "Gold answer: ".
class TableJudge : public Provider {
 public:
  std::set<std::string> yes;
  bool related = false;

  std::string endpoint() const override { return "acceptance://judge"; }
  ChatResponse chat(const ChatRequest& req) override {
    const auto& text = req.messages.back().content;
    if (text.find("Gold answer: ") != std::string::npos) {
      return {related ? "Yes" : "No", FinishReason::Stop, false};
    }
    return {yes.contains(after(text, "Candidate answer: ")) ? "Yes" : "No", FinishReason::Stop,
            false};
  }
  std::vector<std::vector<double>> embed(const std::vector<std::string>&,
                                         const std::string&) override {
    throw ScriptMiss("no embeddings");
  }
};

Outcome ac1_equation_oracle() {
  Outcome out;
  auto start = Clock::now();
  ConvergenceOptions opts;
  opts.prompts.relatedness_template =
      "Question: {question}\nHint: {hint}\nGold answer: {answer}\nRelated?";
  std::mt19937_64 rng(20240917);
  for (int trial = 0; trial < 1000 && out.pass; ++trial) {
    std::size_t n = 1 + rng() % 20;
    std::size_t v = rng() % (n + 1);
    bool related = rng() % 2 == 1;
    auto judge = std::make_shared<TableJudge>();
    judge->related = related;
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[i] = "C" + std::to_string(i);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < v; ++k) judge->yes.insert(names[order[k]]);

    Gateway gw(judge, no_cache());
    auto q = test::make_question("q", "Q?", names[0], {"hint"});
    double got = score_hint(q, 0, CandidateSet{names}, gw, opts).score;
    double want = related ? std::clamp(1.0 - (double(v) - 1.0) / double(n), 0.0, 1.0) : 0.0;
    std::ostringstream why;
    why << "n=" << n << " v=" << v << " related=" << related << " got=" << got
        << " want=" << want;
    out.check(std::abs(got - want) <= 1e-12, why.str());
  }
  double secs = seconds_since(start);
  out.check(secs < 1.0, "took " + std::to_string(secs) + "s");
  if (out.pass) out.detail = "1000 cases in " + std::to_string(secs) + "s";
  return out;
}

Outcome ac2_enumeration() {
  Outcome out;
  auto start = Clock::now();
  out.check(enumerate_subsets(9, {3, 4, 5}).size() == 336, "C(9,{3,4,5}) != 336");
  for (std::size_t n = 5; n <= 10; ++n) {
    std::vector<IndexTuple> brute;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      IndexTuple t;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) t.push_back(i);
      }
      if (t.size() >= 3 && t.size() <= 5) brute.push_back(t);
    }
    std::sort(brute.begin(), brute.end(), [](const IndexTuple& a, const IndexTuple& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    out.check(enumerate_subsets(n, {3, 4, 5}) == brute, "mismatch at n=" + std::to_string(n));
  }
  double secs = seconds_since(start);
  out.check(secs < 1.0, "took " + std::to_string(secs) + "s");
  if (out.pass) out.detail = "336 tuples; n<=10 match brute force";
  return out;
}

/// Per-question hint scores for a generated world, through the scripted world provider.
std::map<std::string, HintScores> world_scores(const testworld::GeneratedWorld& g) {
  Gateway gw(testworld::world_provider(g.world), no_cache());
  ConvergenceOptions conv;
  conv.generation_model = "gen";
  conv.judge_model = "judge";
  test::TempDir dir;
  auto r = score_corpus(g.corpus, gw, ScoreCorpusOptions{conv, dir / "c.jsonl", false, 4});
  std::map<std::string, HintScores> out;
  for (const auto& rec : r.records) out[rec.question_id].convergence[rec.hint_index] = rec.score;
  for (const auto& q : g.corpus.questions()) {
    auto sims = question_sentence_similarities(q, gw, "hash");
    for (std::size_t i = 0; i < sims.size(); ++i) out[q.id].cosine[i] = sims[i];
  }
  return out;
}

std::string dump_groups(const GroupSelection& g) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto* side : {&g.high, &g.low}) {
    for (const auto& s : *side) j.push_back({s.hint_indices, s.conv_avg, s.cos_avg});
  }
  return j.dump();
}

Outcome ac3_group_separation() {
  Outcome out;
  std::size_t checked = 0;
  std::mt19937_64 rng(5);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    auto g = testworld::generate_world(seed, 6 + seed * 3, 6);
    auto scores = world_scores(g);
    for (const auto& q : g.corpus.questions()) {
      auto scored = score_subsets(q, scores[q.id]);
      for (auto m : {Method::Convergence, Method::CosineSimilarity}) {
        auto sel = select_groups(scored, m, kDefaultGroupSize);
        double min_high = INFINITY, max_low = -INFINITY;
        std::set<IndexTuple> high;
        for (const auto& s : sel.high) {
          min_high = std::min(min_high, s.key(m));
          high.insert(s.hint_indices);
        }
        bool disjoint = true;
        for (const auto& s : sel.low) {
          max_low = std::max(max_low, s.key(m));
          disjoint = disjoint && !high.contains(s.hint_indices);
        }
        auto shuffled = scored;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto again = select_groups(shuffled, m, kDefaultGroupSize);
        std::string where = "seed " + std::to_string(seed) + " " + q.id + " " +
                            std::string(to_string(m));
        out.check(min_high >= max_low, where + ": min(High) < max(Low)");
        out.check(disjoint, where + ": groups overlap");
        out.check(dump_groups(sel) == dump_groups(again), where + ": selection not stable");
        ++checked;
      }
    }
  }
  if (out.pass) out.detail = std::to_string(checked) + " selections over 5 worlds";
  return out;
}

double fraction(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

Outcome ac4_metric_fixtures() {
  Outcome out;
  auto cases = nlohmann::json::parse(test::slurp(test::data_path("metric_fixtures.json")));
  out.check(cases.size() == 25, "fixture file holds " + std::to_string(cases.size()) + " cases");
  for (const auto& c : cases) {
    GoldAnswer gold{c.at("gold"), c.at("aliases").get<std::vector<std::string>>()};
    std::string pred = c.at("prediction");
    auto prf = token_prf(pred, gold);
    std::string name = c.at("name");
    out.check(exact_match(pred, gold) == c.at("em").get<int>(), name + ": em");
    out.check(prf.precision == fraction(c.at("precision")), name + ": precision");
    out.check(prf.recall == fraction(c.at("recall")), name + ": recall");
    out.check(prf.f1 == fraction(c.at("f1")), name + ": f1");
  }
  if (out.pass) out.detail = "25/25 cases exact";
  return out;
}

Outcome ac5_golden_prompt() {
  Outcome out;
  auto q = test::make_question(
      "china",
      "Which country borders 14 others and uses a single time zone across its vast territory?",
      "China",
      {"Its capital is Beijing.", "Its population is more than 1 billion.",
       "This country has a history spanning more than 3,000 years of continuous civilization."});
  auto req = build_prompt(assemble_passage(q, {0, 1, 2}), q, default_shots(), QaOptions{});
  const auto& sys = req.messages.at(0).content;
  const auto& user = req.messages.at(1).content;
  out.check(sys == test::slurp(test::data_path("golden_china_system.txt")), "system text differs");
  out.check(user == test::slurp(test::data_path("golden_china_user.txt")), "user text differs");
  out.check(sys.find("You just answer questions with exact answers.") != std::string::npos,
            "system sentence missing");
  out.check(user.find("respond only with \"NO ANSWER\"") != std::string::npos,
            "condition 4 wording missing");
  if (out.pass) out.detail = "system and user messages byte-identical";
  return out;
}

/// Seeded world written to disk plus a config pointing at it.
RunConfig world_run(const std::filesystem::path& root, std::uint64_t seed,
                    std::size_t n_entities, std::size_t n_questions,
                    std::vector<Method> methods, std::vector<Ordering> orderings) {
  std::filesystem::create_directories(root);
  auto g = testworld::generate_world(seed, n_entities, 6, n_questions);
  save_corpus(g.corpus, root / "corpus.jsonl");
  testworld::save_world(g.world, root / "world.json");
  RunConfig c;
  c.dataset = root / "corpus.jsonl";
  c.cache_dir = root / "cache";
  c.out_dir = root / "out";
  c.provider = ProviderKind::World;
  c.world_file = root / "world.json";
  c.scorer_model = "scorer";
  c.embedding_model = "hash";
  c.answer_models = {"rule-answerer"};
  c.methods = std::move(methods);
  c.orderings = std::move(orderings);
  c.concurrency = 4;
  c.retry_backoff = {0ms};
  finalize_config(c);
  return c;
}

struct StageCalls {
  std::vector<int> exit_codes;
  std::size_t provider_calls = 0;
};

StageCalls run_all(const RunConfig& c) {
  StageCalls s;
  for (const auto& stage : {cmd_score, cmd_build, cmd_answer, cmd_report}) {
    auto r = stage(c);
    s.exit_codes.push_back(r.exit_code);
    s.provider_calls += r.provider_calls;
  }
  return s;
}

bool all_ok(const StageCalls& s) {
  return std::all_of(s.exit_codes.begin(), s.exit_codes.end(),
                     [](int code) { return code == kExitOk; });
}

Outcome ac6_end_to_end_determinism() {
  Outcome out;
  test::TempDir dir;
  const std::vector<Method> both{Method::Convergence, Method::CosineSimilarity};
  const std::vector<Ordering> orders{Ordering::Canonical, Ordering::Ascending,
                                     Ordering::Descending};
  auto a = world_run(dir / "a", 42, 20, 24, both, orders);
  auto b = world_run(dir / "b", 42, 20, 24, both, orders);

  auto corpus = load_corpus(a.dataset);
  bool shape = corpus.size() >= 20 &&
               std::all_of(corpus.questions().begin(), corpus.questions().end(),
                           [](const Question& q) { return q.hints.size() >= 8; });
  out.check(shape, "world below 20 questions x 8 hints");

  auto first = run_all(a);
  auto second = run_all(b);
  out.check(all_ok(first) && all_ok(second), "a stage did not exit cleanly");
  auto pa = RunPaths::under(a.out_dir), pb = RunPaths::under(b.out_dir);
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> files{
      {pa.convergence_ledger, pb.convergence_ledger}, {pa.similarity_ledger, pb.similarity_ledger},
      {pa.manifest, pb.manifest},     {pa.predictions, pb.predictions},
      {pa.report_csv, pb.report_csv}, {pa.report_txt, pb.report_txt},
      {pa.report_json, pb.report_json}};
  for (const auto& [x, y] : files) {
    auto tx = test::slurp(x);
    out.check(!tx.empty() && tx == test::slurp(y), x.filename().string() + " differs");
  }

  // Warm rerun over the first run's cache, rewriting every ledger.
  auto warm_cfg = a;
  warm_cfg.resume = false;
  auto before = test::slurp(pa.report_csv);
  auto warm = run_all(warm_cfg);
  out.check(all_ok(warm), "warm rerun failed");
  out.check(warm.provider_calls == 0,
            "warm rerun made " + std::to_string(warm.provider_calls) + " provider calls");
  out.check(test::slurp(pa.report_csv) == before, "warm rerun changed report.csv");
  if (out.pass) {
    out.detail = "7 files identical; cold calls " + std::to_string(first.provider_calls) +
                 ", warm calls 0";
  }
  return out;
}

Outcome ac7_direction_check() {
  Outcome out;
  auto start = Clock::now();
  test::TempDir dir;
  std::ostringstream summary;
  for (std::uint64_t seed : {7u, 19u, 23u}) {
    auto c = world_run(dir / std::to_string(seed), seed, 20, 0, {Method::Convergence},
                       {Ordering::Ascending, Ordering::Descending});
    auto s = run_all(c);
    out.check(all_ok(s), "pipeline failed for seed " + std::to_string(seed));
    if (!all_ok(s)) continue;
    auto report = aggregate(read_prediction_ledger(RunPaths::under(c.out_dir).predictions),
                            load_corpus(c.dataset));
    auto em = [&](Group g, Ordering o) {
      const auto* cell = report.find(Method::Convergence, g, o, "rule-answerer");
      return cell ? cell->percent.em : NAN;
    };
    for (auto o : {Ordering::Ascending, Ordering::Descending}) {
      double gap = em(Group::High, o) - em(Group::Low, o);
      out.check(gap >= 10.0, "seed " + std::to_string(seed) + " High-Low gap " +
                                 std::to_string(gap) + "pp");
    }
    for (auto g : {Group::High, Group::Low}) {
      out.check(em(g, Ordering::Ascending) == em(g, Ordering::Descending),
                "seed " + std::to_string(seed) + " ascending EM differs from descending");
    }
    summary << " seed " << seed << ": High " << em(Group::High, Ordering::Descending) << " Low "
            << em(Group::Low, Ordering::Descending) << ";";
  }
  double secs = seconds_since(start);
  out.check(secs < 30.0, "took " + std::to_string(secs) + "s");
  if (out.pass) out.detail = "Desc==Asc;" + summary.str() + " " + std::to_string(secs) + "s";
  return out;
}

std::multiset<std::string> lines_of(const std::string& text) {
  std::multiset<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.insert(line);
  return out;
}

Outcome ac8_permutation_invariance() {
  Outcome out;
  std::size_t pairs = 0;
  BuildOptions opts;
  opts.orderings = {Ordering::Ascending, Ordering::Descending};
  for (std::uint64_t seed : {3u, 9u}) {
    auto g = testworld::generate_world(seed, 10, 6);
    auto scores = world_scores(g);
    for (const auto& q : g.corpus.questions()) {
      auto passages = build_passages(q, scores[q.id], opts);
      std::map<std::tuple<Method, Group, IndexTuple>, std::vector<const PassageInstance*>> by;
      for (const auto& p : passages) {
        auto key = p.hint_indices;
        std::sort(key.begin(), key.end());
        by[{p.method, p.group, key}].push_back(&p);
      }
      for (const auto& [key, ps] : by) {
        out.check(ps.size() == 2, "subset without an asc/desc pair in " + q.id);
        if (ps.size() != 2) continue;
        out.check(lines_of(ps[0]->text) == lines_of(ps[1]->text),
                  "line multisets differ in " + q.id);
        ++pairs;
      }
    }
  }
  if (out.pass) out.detail = std::to_string(pairs) + " asc/desc pairs";
  return out;
}

Outcome ac9_cache_race() {
  Outcome out;
  test::TempDir dir;
  class Slow : public Provider {
   public:
    std::latch gate{8};
    std::atomic<int> calls{0};
    std::string endpoint() const override { return "acceptance://slow"; }
    ChatResponse chat(const ChatRequest&) override {
      int n = ++calls;
      gate.arrive_and_wait();
      return {"response-" + std::to_string(n), FinishReason::Stop, false};
    }
    std::vector<std::vector<double>> embed(const std::vector<std::string>&,
                                           const std::string&) override {
      throw ScriptMiss("no embeddings");
    }
  };
  auto provider = std::make_shared<Slow>();
  GatewayOptions o;
  o.cache_dir = dir.path();
  o.concurrency = 8;
  Gateway gw(provider, o);
  ChatRequest req;
  req.model = "m";
  req.messages = {{Role::User, "same key"}};
  std::vector<std::string> seen(8);
  {
    std::vector<std::jthread> workers;
    for (int k = 0; k < 8; ++k) {
      workers.emplace_back([&, k] { seen[k] = gw.chat(req).content; });
    }
  }
  ResponseCache cache(dir.path());
  auto entries = cache.entry_count();
  out.check(provider->calls.load() == 8, "workers did not all miss the cache");
  out.check(entries == 1, std::to_string(entries) + " entries persisted");
  out.check(std::set<std::string>(seen.begin(), seen.end()).size() == 1,
            "callers saw different responses");
  Gateway warm(provider, o);
  out.check(warm.chat(req).content == seen[0], "persisted entry differs from observed bytes");
  if (out.pass) out.detail = "8 workers, 1 entry, identical bytes";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 convergence score equals clamped oracle", ac1_equation_oracle},
      {"AC2 subset enumeration", ac2_enumeration},
      {"AC3 group separation", ac3_group_separation},
      {"AC4 metric fixtures", ac4_metric_fixtures},
      {"AC5 golden prompt", ac5_golden_prompt},
      {"AC6 end-to-end determinism", ac6_end_to_end_determinism},
      {"AC7 High > Low and ordering-neutral harness", ac7_direction_check},
      {"AC8 ordering permutation invariance", ac8_permutation_invariance},
      {"AC9 concurrent cache writes", ac9_cache_race},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
