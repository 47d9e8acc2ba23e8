#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hintqa/corpus.hpp"
#include "hintqa/types.hpp"

namespace hintqa {

using IndexTuple = std::vector<std::size_t>;

struct ScoredSubset {
  std::string question_id;
  /// Strictly increasing.
  IndexTuple hint_indices;
  double conv_avg = 0.0;
  double cos_avg = 0.0;

  double key(Method m) const noexcept {
    return m == Method::Convergence ? conv_avg : cos_avg;
  }
  friend bool operator==(const ScoredSubset&, const ScoredSubset&) = default;
};

struct GroupSelection {
  Method method = Method::Convergence;
  /// Both in ascending key order.
  std::vector<ScoredSubset> high;
  std::vector<ScoredSubset> low;
};

struct PassageInstance {
  std::string question_id;
  /// Presentation order.
  IndexTuple hint_indices;
  Ordering ordering = Ordering::Canonical;
  Group group = Group::High;
  Method method = Method::Convergence;
  std::string text;
  double conv_avg = 0.0;
  double cos_avg = 0.0;

  PassageRef ref() const { return {method, group, ordering, hint_indices}; }
  friend bool operator==(const PassageInstance&, const PassageInstance&) = default;
};

inline const std::set<std::size_t> kDefaultSubsetSizes{3, 4, 5};
inline constexpr std::size_t kDefaultGroupSize = 10;

/// Every combination of each size, ordered by (size, lexicographic tuple).
/// Throws InsufficientHints when n_hints < max(sizes), std::invalid_argument
/// on an empty or zero size set.
std::vector<IndexTuple> enumerate_subsets(std::size_t n_hints, const std::set<std::size_t>& sizes);

/// Sum of C(n, s) over sizes (0 for sizes above n).
std::size_t count_subsets(std::size_t n_hints, const std::set<std::size_t>& sizes);

/// Smallest hint count that yields at least 2k subsets.
std::size_t min_hints_for_groups(const std::set<std::size_t>& sizes, std::size_t k);

/// Per-hint convergence and question cosine, keyed by hint index.
struct HintScores {
  std::map<std::size_t, double> convergence;
  std::map<std::size_t, double> cosine;
};

/// Means of member scores per subset. Throws MissingScore.
std::vector<ScoredSubset> score_subsets(const Question& question, const HintScores& scores,
                                        const std::set<std::size_t>& sizes = kDefaultSubsetSizes);

/// Total order used for selection: key, then size, then lexicographic indices.
bool selection_less(const ScoredSubset& a, const ScoredSubset& b, Method method);

/// Low = first k, High = last k of the selection order. Throws TooFewSubsets.
GroupSelection select_groups(std::vector<ScoredSubset> scored, Method method,
                             std::size_t k = kDefaultGroupSize);

/// Presentation permutation of the subset's indices. Descending puts the
/// highest per-hint convergence first; ties go to the lower index.
IndexTuple order_subset(const IndexTuple& subset, const std::map<std::size_t, double>& per_hint,
                        Ordering ordering);

/// Hints joined by '\n' in permutation order. Throws std::out_of_range or
/// std::invalid_argument on bad or repeated indices.
PassageInstance assemble_passage(const Question& question, const IndexTuple& permutation);

struct BuildOptions {
  std::set<std::size_t> sizes = kDefaultSubsetSizes;
  std::size_t group_size = kDefaultGroupSize;
  std::vector<Method> methods{Method::Convergence, Method::CosineSimilarity};
  std::vector<Ordering> orderings{Ordering::Canonical};
};

/// All passages for one question: method x {High, Low} x ordering x subset.
std::vector<PassageInstance> build_passages(const Question& question, const HintScores& scores,
                                            const BuildOptions& options);

nlohmann::json to_json(const PassageInstance& p);
PassageInstance passage_from_json(const nlohmann::json& j);

}  // namespace hintqa
