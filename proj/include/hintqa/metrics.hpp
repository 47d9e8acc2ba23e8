#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hintqa/corpus.hpp"
#include "hintqa/types.hpp"

namespace hintqa {

/// Canonical abstention token emitted by the answering protocol.
inline constexpr std::string_view kNoAnswer = "NO ANSWER";

struct MetricScores {
  double em = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// SQuAD-style answer normalization: ASCII case-fold, drop ASCII
/// punctuation, drop the whole-word articles a/an/the, collapse whitespace.
std::string normalize(std::string_view text);

/// Whitespace tokens of normalize(text).
std::vector<std::string> normalized_tokens(std::string_view text);

/// 1 iff the normalized prediction equals the normalized gold text or any
/// alias. A prediction that normalizes to "no answer" scores 0 unless the
/// gold itself normalizes to "no answer".
int exact_match(std::string_view prediction, const GoldAnswer& gold);

/// Token-level precision/recall/F1 over multiset overlap, best over the gold
/// text and its aliases (by F1, then precision).
PRF token_prf(std::string_view prediction, const GoldAnswer& gold);

MetricScores score_prediction(std::string_view prediction, const GoldAnswer& gold);

struct QAPrediction {
  std::string question_id;
  PassageRef passage;
  std::string model;
  std::string raw_output;
  std::string answer;
  bool abstained = false;
  bool empty_output = false;
  /// Non-empty for ledger error rows.
  std::string error;
};

enum class AggregationUnit { Passage, Question };

struct ReportCell {
  Method method = Method::Convergence;
  Group group = Group::High;
  Ordering ordering = Ordering::Canonical;
  std::string model;
  /// Means scaled to percent; full precision.
  MetricScores percent;
  std::size_t count = 0;
};

struct EvalReport {
  AggregationUnit unit = AggregationUnit::Passage;
  /// Sorted by method, group (High before Low), ordering, then model in
  /// first-appearance order.
  std::vector<ReportCell> cells;
  /// Models in first-appearance order.
  std::vector<std::string> models;
  std::vector<std::string> warnings;

  const ReportCell* find(Method m, Group g, Ordering o, std::string_view model) const;
};

/// Fold predictions into per-(method, group, ordering, model) means.
/// Rows carrying an error are excluded; a cell left with no usable rows is
/// omitted and reported in `warnings`.
EvalReport aggregate(const std::vector<QAPrediction>& predictions, const Corpus& corpus,
                     AggregationUnit unit = AggregationUnit::Passage);

}  // namespace hintqa
