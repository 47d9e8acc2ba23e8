// Command-line driver: score -> build -> answer -> report over one run directory.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hintqa/corpus.hpp"
#include "hintqa/errors.hpp"
#include "hintqa/pipeline.hpp"
#include "hintqa/testworld.hpp"

namespace {

using namespace hintqa;

struct Overrides {
  std::string config;
  std::string dataset;
  std::string cache_dir;
  std::string out_dir;
  std::string method;
  std::vector<std::string> orderings;
  std::optional<std::size_t> group_size;
  std::optional<std::size_t> concurrency;
  std::string aggregate;
  bool resume = true;
};

RunConfig resolve_config(const Overrides& o, bool resume_given, bool need_dataset) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.dataset.empty()) c.dataset = o.dataset;
  if (!o.cache_dir.empty()) c.cache_dir = o.cache_dir;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (!o.method.empty()) {
    if (o.method == "both") {
      c.methods = {Method::Convergence, Method::CosineSimilarity};
    } else if (auto m = parse_method(o.method)) {
      c.methods = {*m};
    } else {
      throw ConfigError("--method expects convergence, cosine or both");
    }
  }
  if (!o.orderings.empty()) {
    c.orderings.clear();
    for (const auto& s : o.orderings) {
      auto ord = parse_ordering(s);
      if (!ord) throw ConfigError("--orderings expects canonical, asc or desc");
      if (std::find(c.orderings.begin(), c.orderings.end(), *ord) == c.orderings.end()) {
        c.orderings.push_back(*ord);
      }
    }
  }
  if (o.group_size) c.group_size = *o.group_size;
  if (o.concurrency) c.concurrency = *o.concurrency;
  if (o.aggregate == "question") c.aggregate = AggregationUnit::Question;
  if (o.aggregate == "passage") c.aggregate = AggregationUnit::Passage;
  if (resume_given) c.resume = o.resume;
  finalize_config(c, need_dataset);
  return c;
}

void print(const char* stage, const CommandResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << stage << ": rows=" << r.rows_written << " errors=" << r.errors
            << " provider_calls=" << r.provider_calls << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hint convergence scoring and passage QA evaluation"};
  app.require_subcommand(1);

  Overrides o;
  app.add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  app.add_option("--dataset", o.dataset, "Dataset JSONL");
  app.add_option("--cache-dir", o.cache_dir, "Response cache directory");
  app.add_option("--out-dir", o.out_dir, "Directory for ledgers and reports");
  app.add_option("--method", o.method, "Selection method")
      ->check(CLI::IsMember({"convergence", "cosine", "both"}));
  app.add_option("--orderings", o.orderings, "Sentence orderings (repeatable)")
      ->check(CLI::IsMember({"canonical", "asc", "desc"}))
      ->take_all();
  app.add_option("--group-size", o.group_size, "Subsets per group")->check(CLI::PositiveNumber);
  app.add_option("--concurrency", o.concurrency, "In-flight request limit")
      ->check(CLI::PositiveNumber);
  app.add_option("--aggregate", o.aggregate, "Averaging unit for reports")
      ->check(CLI::IsMember({"passage", "question"}));
  auto* resume = app.add_flag("--resume,!--no-resume", o.resume, "Resume from existing ledgers");

  auto* score = app.add_subcommand("score", "Write the convergence and similarity ledgers");
  auto* build = app.add_subcommand("build", "Write the passage manifest");
  auto* answer = app.add_subcommand("answer", "Write the prediction ledger");
  auto* report = app.add_subcommand("report", "Write report.csv, report.txt and report.json");
  auto* run = app.add_subcommand("run", "score, build, answer and report in sequence");
  for (auto* sub : {score, build, answer, report, run}) sub->fallthrough();

  auto* world = app.add_subcommand("world", "Generate a synthetic world fixture");
  std::uint64_t seed = 7;
  std::size_t entities = 20, attributes = 6, questions = 0;
  std::string world_out = "world";
  world->add_option("--seed", seed, "Generator seed");
  world->add_option("--entities", entities, "Entity count")->check(CLI::Range(2, 1000000));
  world->add_option("--attributes", attributes, "Unique attributes per entity")
      ->check(CLI::Range(3, 1000000));
  world->add_option("--questions", questions, "Question count (0: one per entity)");
  world->add_option("--out", world_out, "Output directory for corpus.jsonl and world.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (world->parsed()) {
      auto g = testworld::generate_world(seed, entities, attributes, questions);
      std::filesystem::create_directories(world_out);
      save_corpus(g.corpus, std::filesystem::path(world_out) / "corpus.jsonl");
      testworld::save_world(g.world, std::filesystem::path(world_out) / "world.json");
      std::cout << "world: questions=" << g.corpus.size() << " entities=" << entities << '\n';
      return kExitOk;
    }

    auto config = resolve_config(o, resume->count() > 0, true);
    int code = kExitOk;
    auto step = [&](const char* name, CommandResult (*fn)(const RunConfig&)) {
      auto r = fn(config);
      print(name, r);
      code = (code == kExitFailure || r.exit_code == kExitFailure) ? int(kExitFailure)
                                                                   : std::max(code, r.exit_code);
      return r.exit_code != kExitFailure;
    };
    if (score->parsed()) return step("score", cmd_score), code;
    if (build->parsed()) return step("build", cmd_build), code;
    if (answer->parsed()) return step("answer", cmd_answer), code;
    if (report->parsed()) return step("report", cmd_report), code;
    if (run->parsed()) {
      step("score", cmd_score) && step("build", cmd_build) && step("answer", cmd_answer) &&
          step("report", cmd_report);
      return code;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
