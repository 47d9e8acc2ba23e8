#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hintqa/config.hpp"
#include "hintqa/subsets.hpp"

namespace hintqa {

/// Output files of a run, all under out_dir.
struct RunPaths {
  std::filesystem::path convergence_ledger;
  std::filesystem::path similarity_ledger;
  std::filesystem::path manifest;
  std::filesystem::path predictions;
  std::filesystem::path report_csv;
  std::filesystem::path report_txt;
  std::filesystem::path report_json;

  static RunPaths under(const std::filesystem::path& out_dir);
};

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitFailure = 2,
  /// Some rows failed; the ledgers hold error rows for them.
  kExitPartial = 3,
};

struct CommandResult {
  int exit_code = kExitOk;
  std::size_t rows_written = 0;
  std::size_t errors = 0;
  /// Provider calls (network operations for the HTTP provider).
  std::size_t provider_calls = 0;
  std::vector<std::string> warnings;
};

/// Convergence ledger plus similarity ledger.
CommandResult cmd_score(const RunConfig& config);
/// Passage manifest from the corpus and both ledgers.
CommandResult cmd_build(const RunConfig& config);
/// Prediction ledger for every (passage, answer model).
CommandResult cmd_answer(const RunConfig& config);
/// report.csv, report.txt, report.json from the prediction ledger.
CommandResult cmd_report(const RunConfig& config);

// Similarity ledger rows: {"question_id","hint_index","cosine"}.
struct SimilarityRow {
  std::string question_id;
  std::size_t hint_index = 0;
  double cosine = 0.0;
};
std::vector<SimilarityRow> read_similarity_ledger(const std::filesystem::path& path);

std::vector<PassageInstance> read_manifest(const std::filesystem::path& path);

}  // namespace hintqa
