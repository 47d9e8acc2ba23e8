#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hintqa/corpus.hpp"
#include "hintqa/gateway.hpp"
#include "hintqa/metrics.hpp"
#include "hintqa/subsets.hpp"

namespace hintqa {

/// Identifies the revision of the answering prompt below.
inline constexpr std::string_view kQaPromptVersion = "fewshot-qa/1";

inline constexpr std::string_view kQaSystemPrompt =
    "You are an assistant that answers questions based on the provided context. You just "
    "answer questions with exact answers. You do not use sentences as the response.";

/// Instruction block that opens the user message.
inline constexpr std::string_view kQaConditions =
    "Use the context to answer the question under conditions:\n"
    "1. Answer should not be sentences. It should be some words.\n"
    "2. Do not generate \"sorry\" or \"I cannot ...\" sentences; instead, use \"NO ANSWER\".\n"
    "3. Do not generate explanations, reasoning, or full sentences—only provide the exact "
    "answer.\n"
    "4. If the answer cannot be guessed from the context, respond only with \"NO ANSWER\".";

inline constexpr std::size_t kDefaultShotCount = 5;

struct FewShotExemplar {
  std::string context;
  std::string question;
  std::string answer;

  /// Throws ConfigError on empty fields or a multi-line answer.
  void validate() const;
};

/// The Obama exemplar followed by four constructed ones.
const std::vector<FewShotExemplar>& default_shots();

/// JSON array of {"context","question","answer"}.
std::vector<FewShotExemplar> load_shots(const std::filesystem::path& path);

struct QaOptions {
  std::string model;
  double temperature = 0.0;
  std::optional<std::int64_t> seed = 0;
  int max_tokens = 32;
  std::size_t shot_count = kDefaultShotCount;
};

/// Render the few-shot request. Uses exactly `shot_count` shots (the list
/// must hold at least that many; std::invalid_argument otherwise).
ChatRequest build_prompt(std::string_view passage_text, const Question& question,
                         const std::vector<FewShotExemplar>& shots, const QaOptions& options);
ChatRequest build_prompt(const PassageInstance& passage, const Question& question,
                         const std::vector<FewShotExemplar>& shots, const QaOptions& options);

struct ExtractedAnswer {
  std::string answer;
  bool abstained = false;
  /// Set when the raw output had no non-blank line.
  bool empty_output = false;
};

/// First non-empty line, trimmed, surrounding quotes and one trailing period
/// removed. "no answer" (any case) and refusals map to the NO ANSWER token.
ExtractedAnswer extract_answer(std::string_view raw);

nlohmann::json to_json(const QAPrediction& p);
QAPrediction prediction_from_json(const nlohmann::json& j);
std::vector<QAPrediction> read_prediction_ledger(const std::filesystem::path& path);

struct AnswerOptions {
  QaOptions qa;
  std::vector<FewShotExemplar> shots = default_shots();
  std::filesystem::path ledger_path;
  bool resume = true;
  std::size_t concurrency = 1;
};

struct AnswerResult {
  std::vector<QAPrediction> predictions;
  std::size_t errors = 0;
  std::size_t skipped = 0;
};

/// One prediction per passage for options.qa.model, appended to the ledger
/// in passage order. Passages already in the ledger for this model are
/// skipped when resuming. Throws UnknownQuestion before any call if a
/// passage does not resolve.
AnswerResult answer_passages(const std::vector<PassageInstance>& passages, const Corpus& corpus,
                             Gateway& gateway, const AnswerOptions& options);

}  // namespace hintqa
