#include "hintqa/pipeline.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "hintqa/convergence.hpp"
#include "hintqa/corpus.hpp"
#include "hintqa/errors.hpp"
#include "hintqa/gateway.hpp"
#include "hintqa/metrics.hpp"
#include "hintqa/qa.hpp"
#include "hintqa/report.hpp"
#include "hintqa/similarity.hpp"
#include "hintqa/testworld.hpp"
#include "util.hpp"

namespace hintqa {
namespace {

using nlohmann::json;

constexpr std::size_t kSimilarityChunk = 64;

std::shared_ptr<Provider> make_provider(const RunConfig& c, const std::string& base_url) {
  switch (c.provider) {
    case ProviderKind::Http:
      return std::make_shared<HttpProvider>(HttpProviderOptions{base_url, c.api_key});
    case ProviderKind::World:
      return testworld::world_provider(testworld::load_world(c.world_file));
    case ProviderKind::Scripted:
      try {
        return ScriptedProvider::from_json(json::parse(detail::read_file(c.script_file)),
                                           "scripted://" + c.script_file.filename().string());
      } catch (const json::exception& e) {
        throw ConfigError("malformed script file " + c.script_file.string() + ": " + e.what());
      }
  }
  throw ConfigError("unknown provider kind");
}

GatewayOptions gateway_options(const RunConfig& c) {
  GatewayOptions o;
  o.cache_dir = c.cache_dir;
  o.concurrency = c.concurrency;
  o.retry.backoff = c.retry_backoff;
  if (o.retry.backoff.empty()) o.retry.backoff.emplace_back(0);
  return o;
}

/// Seeded subsample that keeps dataset order.
Corpus sample_corpus(const Corpus& corpus, const RunConfig& c) {
  if (c.sample == 0 || c.sample >= corpus.size()) return corpus;
  std::vector<std::size_t> idx(corpus.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 engine(static_cast<std::uint64_t>(c.seed));
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(engine() % i)]);
  }
  idx.resize(c.sample);
  std::sort(idx.begin(), idx.end());
  std::vector<Question> picked;
  for (auto i : idx) picked.push_back(corpus.questions()[i]);
  return Corpus(std::move(picked), corpus.source_path());
}

Corpus load_sampled(const RunConfig& c) { return sample_corpus(load_corpus(c.dataset), c); }

CandidatePrompts load_prompts(const RunConfig& c) {
  auto p = CandidatePrompts::defaults();
  if (c.prompts_file.empty()) return p;
  try {
    auto j = json::parse(detail::read_file(c.prompts_file));
    for (const auto& [key, value] : j.items()) {
      if (key == "system") p.system = value.get<std::string>();
      else if (key == "generation") p.generation_template = value.get<std::string>();
      else if (key == "judgment") p.judgment_template = value.get<std::string>();
      else if (key == "relatedness") p.relatedness_template = value.get<std::string>();
      else throw ConfigError("unknown prompt key " + key + " in " + c.prompts_file.string());
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed prompts file " + c.prompts_file.string() + ": " + e.what());
  }
  p.validate();
  return p;
}

int exit_code_for(std::size_t attempted, std::size_t errors) {
  if (errors == 0) return kExitOk;
  return errors >= attempted ? kExitFailure : kExitPartial;
}

bool contains(const std::vector<Method>& v, Method m) {
  return std::find(v.begin(), v.end(), m) != v.end();
}

/// Cosine rows for every question whose hints are not all on record yet.
std::size_t write_similarities(const Corpus& corpus, Gateway& gateway, const RunConfig& c,
                               const std::filesystem::path& ledger_path, CommandResult& result) {
  std::map<std::string, std::set<std::size_t>> done;
  if (c.resume) {
    for (const auto& row : read_similarity_ledger(ledger_path)) {
      done[row.question_id].insert(row.hint_index);
    }
  }
  std::vector<const Question*> todo;
  for (const auto& q : corpus.questions()) {
    if (done[q.id].size() < q.hints.size()) todo.push_back(&q);
  }

  detail::JsonlWriter ledger(ledger_path, c.resume);
  std::size_t attempted = 0;
  for (std::size_t start = 0; start < todo.size(); start += kSimilarityChunk) {
    auto n = std::min(kSimilarityChunk, todo.size() - start);
    std::vector<std::vector<double>> sims(n);
    std::vector<std::string> errors(n);
    detail::parallel_for(n, c.concurrency, [&](std::size_t k) {
      try {
        sims[k] = question_sentence_similarities(*todo[start + k], gateway, c.embedding_model);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    });
    for (std::size_t k = 0; k < n; ++k) {
      const auto& q = *todo[start + k];
      ++attempted;
      if (!errors[k].empty()) {
        ledger.write({{"question_id", q.id}, {"error", errors[k]}});
        ++result.errors;
        continue;
      }
      const auto& have = done[q.id];
      for (std::size_t i = 0; i < sims[k].size(); ++i) {
        if (have.contains(i)) continue;
        ledger.write({{"question_id", q.id}, {"hint_index", i}, {"cosine", sims[k][i]}});
        ++result.rows_written;
      }
    }
  }
  return attempted;
}

}  // namespace

RunPaths RunPaths::under(const std::filesystem::path& out_dir) {
  return {out_dir / "convergence.jsonl", out_dir / "similarity.jsonl", out_dir / "manifest.jsonl",
          out_dir / "predictions.jsonl", out_dir / "report.csv",       out_dir / "report.txt",
          out_dir / "report.json"};
}

std::vector<SimilarityRow> read_similarity_ledger(const std::filesystem::path& path) {
  std::vector<SimilarityRow> out;
  for (const auto& j : detail::read_jsonl(path)) {
    if (j.contains("error")) continue;
    try {
      out.push_back({j.at("question_id").get<std::string>(), j.at("hint_index").get<std::size_t>(),
                     j.at("cosine").get<double>()});
    } catch (const json::exception& e) {
      throw Error("malformed similarity row " + j.dump() + ": " + e.what());
    }
  }
  return out;
}

std::vector<PassageInstance> read_manifest(const std::filesystem::path& path) {
  std::vector<PassageInstance> out;
  for (const auto& j : detail::read_jsonl(path)) {
    try {
      out.push_back(passage_from_json(j));
    } catch (const json::exception& e) {
      throw Error("malformed manifest row " + j.dump() + ": " + e.what());
    }
  }
  return out;
}

CommandResult cmd_score(const RunConfig& c) {
  if (c.scorer_model.empty()) throw ConfigError("models.scorer is required for score");
  if (c.embedding_model.empty()) throw ConfigError("models.embedding is required for score");
  auto prompts = load_prompts(c);
  auto corpus = load_sampled(c);
  auto paths = RunPaths::under(c.out_dir);
  std::filesystem::create_directories(c.out_dir);

  Gateway chat(make_provider(c, c.base_url), gateway_options(c));
  Gateway embed(make_provider(c, c.embedding_base_url), gateway_options(c));

  ScoreCorpusOptions opts;
  opts.convergence.generation_model = c.scorer_model;
  opts.convergence.judge_model = c.judge_model.empty() ? c.scorer_model : c.judge_model;
  opts.convergence.temperature = c.temperature;
  opts.convergence.seed = c.seed;
  opts.convergence.prompts = std::move(prompts);
  opts.ledger_path = paths.convergence_ledger;
  opts.resume = c.resume;
  opts.concurrency = c.concurrency;

  CommandResult result;
  auto scored = score_corpus(corpus, chat, opts);
  std::size_t attempted = scored.records.size() + scored.errors - scored.skipped;
  result.rows_written = attempted;
  result.errors = scored.errors;
  attempted += write_similarities(corpus, embed, c, paths.similarity_ledger, result);
  result.provider_calls = chat.provider_calls() + embed.provider_calls();
  result.exit_code = exit_code_for(attempted, result.errors);
  if (result.errors > 0) {
    result.warnings.push_back(std::to_string(result.errors) +
                              " scoring rows failed; rerun with --resume to retry them");
  }
  return result;
}

CommandResult cmd_build(const RunConfig& c) {
  auto corpus = load_sampled(c);
  auto paths = RunPaths::under(c.out_dir);
  CommandResult result;

  std::map<std::string, std::map<std::size_t, double>> conv, cos;
  for (const auto& row : read_convergence_ledger(paths.convergence_ledger)) {
    if (row.record) conv[row.record->question_id][row.record->hint_index] = row.record->score;
  }
  for (const auto& row : read_similarity_ledger(paths.similarity_ledger)) {
    cos[row.question_id][row.hint_index] = row.cosine;
  }

  const bool need_conv =
      contains(c.methods, Method::Convergence) ||
      std::any_of(c.orderings.begin(), c.orderings.end(),
                  [](Ordering o) { return o != Ordering::Canonical; });
  const bool need_cos = contains(c.methods, Method::CosineSimilarity);

  BuildOptions opts{c.subset_sizes, c.group_size, c.methods, c.orderings};
  std::vector<PassageInstance> passages;
  for (const auto& q : corpus.questions()) {
    if (q.hints.size() < c.min_hints) {
      result.warnings.push_back("question " + q.id + " has " + std::to_string(q.hints.size()) +
                                " hints, fewer than " + std::to_string(c.min_hints) + "; skipped");
      continue;
    }
    HintScores scores{conv[q.id], cos[q.id]};
    bool missing = false;
    for (std::size_t i = 0; i < q.hints.size(); ++i) {
      if (!scores.convergence.contains(i)) {
        if (need_conv) missing = true;
        scores.convergence[i] = 0.0;
      }
      if (!scores.cosine.contains(i)) {
        if (need_cos) missing = true;
        scores.cosine[i] = 0.0;
      }
    }
    if (missing) {
      result.warnings.push_back("question " + q.id + " lacks hint scores; skipped");
      continue;
    }
    auto built = build_passages(q, scores, opts);
    std::move(built.begin(), built.end(), std::back_inserter(passages));
  }

  std::string body;
  for (const auto& p : passages) body += to_json(p).dump() + "\n";
  detail::write_file(paths.manifest, body);
  result.rows_written = passages.size();
  if (passages.empty()) {
    result.warnings.push_back("no passages were built");
    result.exit_code = kExitFailure;
  }
  return result;
}

CommandResult cmd_answer(const RunConfig& c) {
  if (c.answer_models.empty()) throw ConfigError("models.answer is required for answer");
  auto shots = c.shots_file.empty() ? default_shots() : load_shots(c.shots_file);
  if (shots.size() < c.shots) {
    throw ConfigError("prompting.shots is " + std::to_string(c.shots) + " but only " +
                      std::to_string(shots.size()) + " exemplars are available");
  }
  auto corpus = load_corpus(c.dataset);
  auto paths = RunPaths::under(c.out_dir);
  auto passages = read_manifest(paths.manifest);
  if (passages.empty()) throw Error("passage manifest is empty or missing: " + paths.manifest.string());

  if (!c.resume) detail::write_file(paths.predictions, "");
  Gateway gateway(make_provider(c, c.base_url), gateway_options(c));

  CommandResult result;
  std::size_t attempted = 0;
  for (const auto& model : c.answer_models) {
    AnswerOptions opts;
    opts.qa.model = model;
    opts.qa.temperature = c.temperature;
    opts.qa.seed = c.seed;
    opts.qa.shot_count = c.shots;
    opts.shots = shots;
    opts.ledger_path = paths.predictions;
    opts.resume = c.resume;
    opts.concurrency = c.concurrency;
    auto r = answer_passages(passages, corpus, gateway, opts);
    auto fresh = passages.size() - r.skipped;
    attempted += fresh;
    result.rows_written += fresh;
    result.errors += r.errors;
  }
  result.provider_calls = gateway.provider_calls();
  result.exit_code = exit_code_for(attempted, result.errors);
  if (result.errors > 0) {
    result.warnings.push_back(std::to_string(result.errors) +
                              " predictions failed; rerun with --resume to retry them");
  }
  return result;
}

CommandResult cmd_report(const RunConfig& c) {
  auto paths = RunPaths::under(c.out_dir);
  auto predictions = read_prediction_ledger(paths.predictions);
  bool usable = std::any_of(predictions.begin(), predictions.end(),
                            [](const QAPrediction& p) { return p.error.empty(); });
  if (!usable) {
    throw Error("prediction ledger has no usable rows: " + paths.predictions.string());
  }
  auto corpus = load_corpus(c.dataset);
  auto report = aggregate(predictions, corpus, c.aggregate);

  detail::write_file(paths.report_csv, render_csv(report));
  detail::write_file(paths.report_txt, render_table(report));
  detail::write_file(paths.report_json, render_json(report).dump(2) + "\n");

  CommandResult result;
  result.rows_written = report.cells.size();
  result.warnings = report.warnings;
  return result;
}

}  // namespace hintqa
