#include "hintqa/subsets.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "hintqa/errors.hpp"
#include "util.hpp"

namespace hintqa {
namespace {

using nlohmann::json;

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double mean_over(const IndexTuple& idx, const std::map<std::size_t, double>& scores) {
  double sum = 0.0;
  for (auto i : idx) {
    auto it = scores.find(i);
    if (it == scores.end()) throw MissingScore(i);
    sum += it->second;
  }
  return sum / static_cast<double>(idx.size());
}

}  // namespace

std::vector<IndexTuple> enumerate_subsets(std::size_t n_hints, const std::set<std::size_t>& sizes) {
  if (sizes.empty() || *sizes.begin() == 0) {
    throw std::invalid_argument("subset sizes must be non-empty and positive");
  }
  if (n_hints < *sizes.rbegin()) throw InsufficientHints(n_hints, *sizes.rbegin());

  std::vector<IndexTuple> out;
  out.reserve(count_subsets(n_hints, sizes));
  for (auto size : sizes) {
    // Lexicographic successor over strictly increasing tuples.
    IndexTuple t(size);
    std::iota(t.begin(), t.end(), 0);
    while (true) {
      out.push_back(t);
      std::size_t i = size;
      while (i > 0 && t[i - 1] == n_hints - size + (i - 1)) --i;
      if (i == 0) break;
      ++t[i - 1];
      for (std::size_t j = i; j < size; ++j) t[j] = t[j - 1] + 1;
    }
  }
  return out;
}

std::size_t count_subsets(std::size_t n_hints, const std::set<std::size_t>& sizes) {
  std::size_t total = 0;
  for (auto s : sizes) total += binomial(n_hints, s);
  return total;
}

std::size_t min_hints_for_groups(const std::set<std::size_t>& sizes, std::size_t k) {
  if (sizes.empty()) throw std::invalid_argument("subset sizes must be non-empty");
  std::size_t n = *sizes.rbegin();
  while (count_subsets(n, sizes) < 2 * k) ++n;
  return n;
}

std::vector<ScoredSubset> score_subsets(const Question& question, const HintScores& scores,
                                        const std::set<std::size_t>& sizes) {
  for (std::size_t i = 0; i < question.hints.size(); ++i) {
    if (!scores.convergence.contains(i) || !scores.cosine.contains(i)) throw MissingScore(i);
  }
  std::vector<ScoredSubset> out;
  for (auto& idx : enumerate_subsets(question.hints.size(), sizes)) {
    ScoredSubset s;
    s.question_id = question.id;
    s.conv_avg = mean_over(idx, scores.convergence);
    s.cos_avg = mean_over(idx, scores.cosine);
    s.hint_indices = std::move(idx);
    out.push_back(std::move(s));
  }
  return out;
}

bool selection_less(const ScoredSubset& a, const ScoredSubset& b, Method method) {
  auto ka = a.key(method), kb = b.key(method);
  if (ka != kb) return ka < kb;
  if (a.hint_indices.size() != b.hint_indices.size()) {
    return a.hint_indices.size() < b.hint_indices.size();
  }
  return a.hint_indices < b.hint_indices;
}

GroupSelection select_groups(std::vector<ScoredSubset> scored, Method method, std::size_t k) {
  if (scored.size() < 2 * k) throw TooFewSubsets(scored.size(), 2 * k);
  std::sort(scored.begin(), scored.end(), [method](const ScoredSubset& a, const ScoredSubset& b) {
    return selection_less(a, b, method);
  });
  GroupSelection g;
  g.method = method;
  g.low.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k));
  g.high.assign(scored.end() - static_cast<std::ptrdiff_t>(k), scored.end());
  return g;
}

IndexTuple order_subset(const IndexTuple& subset, const std::map<std::size_t, double>& per_hint,
                        Ordering ordering) {
  IndexTuple out = subset;
  if (ordering == Ordering::Canonical) {
    std::sort(out.begin(), out.end());
    return out;
  }
  auto score = [&](std::size_t i) {
    auto it = per_hint.find(i);
    if (it == per_hint.end()) throw MissingScore(i);
    return it->second;
  };
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    double sa = score(a), sb = score(b);
    if (sa != sb) return ordering == Ordering::Descending ? sa > sb : sa < sb;
    return a < b;
  });
  return out;
}

PassageInstance assemble_passage(const Question& question, const IndexTuple& permutation) {
  PassageInstance p;
  p.question_id = question.id;
  p.hint_indices = permutation;
  std::vector<bool> used(question.hints.size(), false);
  for (auto i : permutation) {
    if (i >= question.hints.size()) {
      throw std::out_of_range("hint index " + std::to_string(i) + " out of range for " +
                              question.id);
    }
    if (used[i]) throw std::invalid_argument("hint index " + std::to_string(i) + " repeated");
    used[i] = true;
    if (!p.text.empty()) p.text.push_back('\n');
    p.text += detail::trim(question.hints[i]);
  }
  return p;
}

std::vector<PassageInstance> build_passages(const Question& question, const HintScores& scores,
                                            const BuildOptions& options) {
  auto scored = score_subsets(question, scores, options.sizes);
  std::vector<PassageInstance> out;
  for (auto method : options.methods) {
    auto sel = select_groups(scored, method, options.group_size);
    for (auto group : {Group::High, Group::Low}) {
      const auto& subsets = group == Group::High ? sel.high : sel.low;
      for (auto ordering : options.orderings) {
        for (const auto& s : subsets) {
          auto p = assemble_passage(question,
                                    order_subset(s.hint_indices, scores.convergence, ordering));
          p.method = method;
          p.group = group;
          p.ordering = ordering;
          p.conv_avg = s.conv_avg;
          p.cos_avg = s.cos_avg;
          out.push_back(std::move(p));
        }
      }
    }
  }
  return out;
}

json to_json(const PassageInstance& p) {
  json j = json::object();
  j["question_id"] = p.question_id;
  j["method"] = to_string(p.method);
  j["group"] = to_string(p.group);
  j["ordering"] = to_string(p.ordering);
  j["hint_indices"] = p.hint_indices;
  j["conv_avg"] = p.conv_avg;
  j["cos_avg"] = p.cos_avg;
  j["text"] = p.text;
  return j;
}

PassageInstance passage_from_json(const json& j) {
  PassageInstance p;
  p.question_id = j.at("question_id").get<std::string>();
  auto method = parse_method(j.at("method").get<std::string>());
  auto group = parse_group(j.at("group").get<std::string>());
  auto ordering = parse_ordering(j.at("ordering").get<std::string>());
  if (!method || !group || !ordering) throw Error("manifest row with unknown label: " + j.dump());
  p.method = *method;
  p.group = *group;
  p.ordering = *ordering;
  p.hint_indices = j.at("hint_indices").get<IndexTuple>();
  p.conv_avg = j.at("conv_avg").get<double>();
  p.cos_avg = j.at("cos_avg").get<double>();
  p.text = j.at("text").get<std::string>();
  return p;
}

}  // namespace hintqa
