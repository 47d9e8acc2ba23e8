#include "hintqa/metrics.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>

#include "hintqa/errors.hpp"
#include "util.hpp"

namespace hintqa {
namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

bool is_abstention(std::string_view normalized) { return normalized == "no answer"; }

bool gold_is_abstention(const GoldAnswer& gold) {
  if (is_abstention(normalize(gold.text))) return true;
  return std::any_of(gold.aliases.begin(), gold.aliases.end(),
                     [](const std::string& a) { return is_abstention(normalize(a)); });
}

PRF prf_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) {
    double v = (pred.empty() && gold.empty()) ? 1.0 : 0.0;
    return {v, v, v};
  }
  std::unordered_map<std::string_view, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return {};
  PRF r;
  r.precision = static_cast<double>(common) / static_cast<double>(pred.size());
  r.recall = static_cast<double>(common) / static_cast<double>(gold.size());
  // Harmonic mean in count form, one rounding step.
  r.f1 = 2.0 * static_cast<double>(common) / static_cast<double>(pred.size() + gold.size());
  return r;
}

int method_rank(Method m) { return m == Method::Convergence ? 0 : 1; }
int group_rank(Group g) { return g == Group::High ? 0 : 1; }
int ordering_rank(Ordering o) {
  switch (o) {
    case Ordering::Descending: return 0;
    case Ordering::Ascending: return 1;
    case Ordering::Canonical: break;
  }
  return 2;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string folded;
  folded.reserve(text.size());
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_ascii_punct(c)) continue;
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    folded.push_back(static_cast<char>(c));
  }

  std::string out;
  std::size_t i = 0;
  while (i < folded.size()) {
    while (i < folded.size() && detail::is_space(folded[i])) ++i;
    std::size_t start = i;
    while (i < folded.size() && !detail::is_space(folded[i])) ++i;
    if (start == i) break;
    std::string_view tok(folded.data() + start, i - start);
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  }
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  auto norm = normalize(text);
  std::size_t start = 0;
  while (start < norm.size()) {
    auto sp = norm.find(' ', start);
    if (sp == std::string::npos) sp = norm.size();
    tokens.emplace_back(norm.substr(start, sp - start));
    start = sp + 1;
  }
  return tokens;
}

int exact_match(std::string_view prediction, const GoldAnswer& gold) {
  auto pred = normalize(prediction);
  if (is_abstention(pred) && !gold_is_abstention(gold)) return 0;
  if (pred == normalize(gold.text)) return 1;
  for (const auto& alias : gold.aliases) {
    if (pred == normalize(alias)) return 1;
  }
  return 0;
}

PRF token_prf(std::string_view prediction, const GoldAnswer& gold) {
  auto pred = normalized_tokens(prediction);
  if (is_abstention(normalize(prediction)) && !gold_is_abstention(gold)) return {};

  auto better = [](const PRF& a, const PRF& b) {
    return std::tie(a.f1, a.precision) > std::tie(b.f1, b.precision);
  };
  PRF best = prf_tokens(pred, normalized_tokens(gold.text));
  for (const auto& alias : gold.aliases) {
    auto cand = prf_tokens(pred, normalized_tokens(alias));
    if (better(cand, best)) best = cand;
  }
  return best;
}

MetricScores score_prediction(std::string_view prediction, const GoldAnswer& gold) {
  auto prf = token_prf(prediction, gold);
  return {static_cast<double>(exact_match(prediction, gold)), prf.precision, prf.recall, prf.f1};
}

const ReportCell* EvalReport::find(Method m, Group g, Ordering o, std::string_view model) const {
  for (const auto& c : cells) {
    if (c.method == m && c.group == g && c.ordering == o && c.model == model) return &c;
  }
  return nullptr;
}

EvalReport aggregate(const std::vector<QAPrediction>& predictions, const Corpus& corpus,
                     AggregationUnit unit) {
  using CellKey = std::tuple<int, int, int, std::size_t>;

  struct Sum {
    MetricScores total;
    std::size_t n = 0;
    void add(const MetricScores& s) {
      total.em += s.em;
      total.precision += s.precision;
      total.recall += s.recall;
      total.f1 += s.f1;
      ++n;
    }
    MetricScores mean() const {
      auto d = static_cast<double>(n);
      return {total.em / d, total.precision / d, total.recall / d, total.f1 / d};
    }
  };
  struct Cell {
    Method method;
    Group group;
    Ordering ordering;
    Sum passages;
    // Per-question sums, keyed by first-appearance position for determinism.
    std::map<std::string, Sum> by_question;
  };

  EvalReport report;
  report.unit = unit;
  std::map<std::string, std::size_t, std::less<>> model_pos;
  std::map<CellKey, Cell> cells;

  for (const auto& p : predictions) {
    const Question* q = corpus.find(p.question_id);
    if (q == nullptr) throw UnknownQuestion(p.question_id);

    auto [it, inserted] = model_pos.try_emplace(p.model, report.models.size());
    if (inserted) report.models.push_back(p.model);

    CellKey key{method_rank(p.passage.method), group_rank(p.passage.group),
                ordering_rank(p.passage.ordering), it->second};
    auto& cell = cells.try_emplace(key, Cell{p.passage.method, p.passage.group,
                                             p.passage.ordering, {}, {}})
                     .first->second;
    if (!p.error.empty()) continue;

    auto s = score_prediction(p.answer, q->answer);
    cell.passages.add(s);
    cell.by_question[p.question_id].add(s);
  }

  for (const auto& [key, cell] : cells) {
    const auto& model = report.models[std::get<3>(key)];
    if (cell.passages.n == 0) {
      report.warnings.push_back("empty cell omitted: " + std::string(to_string(cell.method)) +
                                "/" + std::string(to_string(cell.group)) + "/" +
                                std::string(to_string(cell.ordering)) + "/" + model);
      continue;
    }
    ReportCell out;
    out.method = cell.method;
    out.group = cell.group;
    out.ordering = cell.ordering;
    out.model = model;

    MetricScores mean;
    if (unit == AggregationUnit::Passage) {
      mean = cell.passages.mean();
      out.count = cell.passages.n;
    } else {
      Sum macro;
      for (const auto& [qid, sum] : cell.by_question) macro.add(sum.mean());
      mean = macro.mean();
      out.count = macro.n;
    }
    out.percent = {mean.em * 100.0, mean.precision * 100.0, mean.recall * 100.0,
                   mean.f1 * 100.0};
    report.cells.push_back(std::move(out));
  }
  return report;
}

}  // namespace hintqa
