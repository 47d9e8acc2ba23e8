#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hintqa/metrics.hpp"
#include "hintqa/types.hpp"

namespace hintqa {

enum class ProviderKind { Http, World, Scripted };

std::string_view to_string(ProviderKind k);

/// Everything a pipeline command needs. Relative paths in a config file, and
/// the default cache and output directories, are resolved against the file's
/// directory.
struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path out_dir = "run";

  ProviderKind provider = ProviderKind::Http;
  std::string base_url;
  /// Defaults to base_url.
  std::string embedding_base_url;
  std::filesystem::path world_file;
  std::filesystem::path script_file;
  /// From LLM_API_KEY only.
  std::string api_key;

  std::string scorer_model;
  /// Defaults to scorer_model.
  std::string judge_model;
  std::vector<std::string> answer_models;
  std::string embedding_model;

  std::set<std::size_t> subset_sizes{3, 4, 5};
  std::size_t group_size = 10;
  std::vector<Method> methods{Method::Convergence, Method::CosineSimilarity};
  std::vector<Ordering> orderings{Ordering::Canonical};
  /// 0 derives the threshold from subset_sizes and group_size.
  std::size_t min_hints = 0;

  std::size_t shots = 5;
  std::filesystem::path shots_file;
  std::filesystem::path prompts_file;

  double temperature = 0.0;
  std::int64_t seed = 0;
  /// Questions sampled (seeded) from the dataset; 0 keeps all.
  std::size_t sample = 0;
  std::size_t concurrency = 4;
  bool resume = true;
  AggregationUnit aggregate = AggregationUnit::Passage;
  std::vector<std::chrono::milliseconds> retry_backoff{
      std::chrono::milliseconds(1000), std::chrono::milliseconds(2000),
      std::chrono::milliseconds(4000)};
};

/// Parse the key/value config grammar (see docs/config.md). Throws ConfigError
/// on syntax errors, unknown keys, or ill-typed values.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Fill derived defaults and check invariants; reads LLM_API_KEY for the
/// HTTP provider. Throws ConfigError.
void finalize_config(RunConfig& config, bool need_dataset = true);

}  // namespace hintqa
