#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hintqa/corpus.hpp"

namespace hintqa {

class Gateway;

inline constexpr std::size_t kMaxCandidates = 20;

enum class Verdict { No, Yes };

std::string_view to_string(Verdict v);

/// Candidate answers for a question. Distinct under normalize(); the
/// generated part is capped at kMaxCandidates, and the gold answer may be
/// appended on top (working set of up to kMaxCandidates + 1).
struct CandidateSet {
  std::vector<std::string> candidates;

  std::size_t size() const noexcept { return candidates.size(); }
  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

struct ConvergenceRecord {
  std::string question_id;
  std::size_t hint_index = 0;
  CandidateSet candidate_set;
  /// Aligned with candidate_set.candidates.
  std::vector<Verdict> judgments;
  bool related = false;
  double score = 0.0;

  std::size_t yes_count() const;
  friend bool operator==(const ConvergenceRecord&, const ConvergenceRecord&) = default;
};

/// User-message templates with {question}, {hint}, {candidate}, {answer}
/// placeholders.
struct CandidatePrompts {
  std::string system;
  std::string generation_template;
  std::string judgment_template;
  std::string relatedness_template;

  static CandidatePrompts defaults();
  /// Every placeholder an operation fills must appear exactly once, and no
  /// placeholder it does not fill may appear. Throws ConfigError.
  void validate() const;
};

struct ConvergenceOptions {
  /// Model that proposes candidates.
  std::string generation_model;
  /// Model that answers the Yes/No applicability prompts.
  std::string judge_model;
  double temperature = 0.0;
  std::optional<std::int64_t> seed = 0;
  int generation_max_tokens = 512;
  int judgment_max_tokens = 8;
  bool append_gold = true;
  CandidatePrompts prompts = CandidatePrompts::defaults();
};

/// Substitute `{name}` placeholders; unknown braces are left as is.
std::string fill_template(std::string_view tmpl, std::string_view question, std::string_view hint,
                          std::string_view candidate, std::string_view answer);

/// Parse "N. text", "N) text", "- text", "* text" or bare lines; strip
/// trailing punctuation; dedupe under normalize(); keep the first
/// kMaxCandidates. Lines ending in ':' are treated as headers and skipped.
std::vector<std::string> parse_candidates(std::string_view model_output);

/// Yes iff the first alphabetic token of the trimmed text, case-folded, is "yes".
Verdict parse_verdict(std::string_view model_output);

/// Convergence with clamping: 0 when unrelated, else clamp(1 - (yes-1)/n, 0, 1).
/// n must be >= 1.
double convergence_score(bool related, std::size_t yes_count, std::size_t candidate_count);

CandidateSet generate_candidates(const Question& question, Gateway& gateway,
                                 const ConvergenceOptions& options);

Verdict judge_applicability(std::string_view hint, std::string_view candidate,
                            const Question& question, Gateway& gateway,
                            const ConvergenceOptions& options);

bool is_related(std::string_view hint, const Question& question, Gateway& gateway,
                const ConvergenceOptions& options);

/// Score one hint against a candidate set already generated for its question.
ConvergenceRecord score_hint(const Question& question, std::size_t hint_index,
                             const CandidateSet& candidates, Gateway& gateway,
                             const ConvergenceOptions& options);
/// Convenience overload that generates the candidate set first.
ConvergenceRecord score_hint(const Question& question, std::size_t hint_index, Gateway& gateway,
                             const ConvergenceOptions& options);

// Run ledger: one JSON object per line.

nlohmann::json to_json(const ConvergenceRecord& rec);
ConvergenceRecord convergence_record_from_json(const nlohmann::json& j);

/// A ledger line: either a record or an error row for one hint.
struct ConvergenceRow {
  std::optional<ConvergenceRecord> record;
  std::string question_id;
  std::size_t hint_index = 0;
  std::string error;
};

std::vector<ConvergenceRow> read_convergence_ledger(const std::filesystem::path& path);

struct ScoreCorpusOptions {
  ConvergenceOptions convergence;
  std::filesystem::path ledger_path;
  bool resume = true;
  /// Hints of one question scored in parallel.
  std::size_t concurrency = 1;
};

struct ScoreCorpusResult {
  /// Successful records, ledger order (existing rows first when resuming).
  std::vector<ConvergenceRecord> records;
  std::size_t errors = 0;
  std::size_t skipped = 0;
  bool complete() const noexcept { return errors == 0; }
};

/// One record per (question, hint). Rows for a question are appended in hint
/// order after the question finishes; already-recorded hints are skipped on
/// resume. Hint failures become error rows and the run continues.
ScoreCorpusResult score_corpus(const Corpus& corpus, Gateway& gateway,
                               const ScoreCorpusOptions& options);

}  // namespace hintqa
