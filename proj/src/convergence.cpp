#include "hintqa/convergence.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <mutex>
#include <set>

#include "hintqa/errors.hpp"
#include "hintqa/gateway.hpp"
#include "hintqa/metrics.hpp"
#include "util.hpp"

namespace hintqa {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kPlaceholders{"question", "hint", "candidate",
                                                        "answer"};

std::size_t count_placeholder(std::string_view tmpl, std::string_view name) {
  std::string needle = "{" + std::string(name) + "}";
  std::size_t n = 0;
  for (auto pos = tmpl.find(needle); pos != std::string_view::npos;
       pos = tmpl.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

void check_template(std::string_view label, std::string_view tmpl,
                    std::initializer_list<std::string_view> required,
                    std::initializer_list<std::string_view> optional) {
  for (auto name : kPlaceholders) {
    auto n = count_placeholder(tmpl, name);
    bool is_required = std::find(required.begin(), required.end(), name) != required.end();
    bool is_optional = std::find(optional.begin(), optional.end(), name) != optional.end();
    if (is_required && n != 1) {
      throw ConfigError(std::string(label) + " template must contain {" + std::string(name) +
                        "} exactly once");
    }
    if (is_optional && n > 1) {
      throw ConfigError(std::string(label) + " template repeats {" + std::string(name) + "}");
    }
    if (!is_required && !is_optional && n > 0) {
      throw ConfigError(std::string(label) + " template may not use {" + std::string(name) + "}");
    }
  }
}

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

/// Removes "12.", "12)", "-", "*" list markers.
std::string_view strip_list_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && is_digit(line[i])) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
    return detail::trim(line.substr(i + 1));
  }
  if (!line.empty() && (line[0] == '-' || line[0] == '*')) return detail::trim(line.substr(1));
  return line;
}

std::string_view strip_trailing_punct(std::string_view s) {
  while (!s.empty() && std::string_view(".,;:!?").find(s.back()) != std::string_view::npos) {
    s.remove_suffix(1);
  }
  return detail::trim(s);
}

std::string_view strip_quotes(std::string_view s) {
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                           (s.front() == '\'' && s.back() == '\''))) {
    s = detail::trim(s.substr(1, s.size() - 2));
  }
  return s;
}

ChatRequest make_request(const std::string& model, const CandidatePrompts& prompts,
                         std::string user, int max_tokens, const ConvergenceOptions& options) {
  ChatRequest req;
  req.model = model;
  if (!prompts.system.empty()) req.messages.push_back({Role::System, prompts.system});
  req.messages.push_back({Role::User, std::move(user)});
  req.temperature = options.temperature;
  req.max_tokens = max_tokens;
  req.seed = options.seed;
  return req;
}

bool gold_in(const std::vector<std::string>& candidates, const GoldAnswer& gold) {
  std::set<std::string> golds{normalize(gold.text)};
  for (const auto& a : gold.aliases) golds.insert(normalize(a));
  return std::any_of(candidates.begin(), candidates.end(),
                     [&](const std::string& c) { return golds.contains(normalize(c)); });
}

}  // namespace

std::string_view to_string(Verdict v) { return v == Verdict::Yes ? "Yes" : "No"; }

std::size_t ConvergenceRecord::yes_count() const {
  return static_cast<std::size_t>(std::count(judgments.begin(), judgments.end(), Verdict::Yes));
}

CandidatePrompts CandidatePrompts::defaults() {
  CandidatePrompts p;
  p.system =
      "You are a careful assistant for trivia reasoning. Follow the requested output format "
      "exactly.";
  p.generation_template =
      "Question: {question}\n"
      "List up to 20 plausible candidate answers to this question, one per line, most "
      "plausible first. Give only the answers, without explanations.\n"
      "Potential answers:";
  p.judgment_template =
      "Question: {question}\n"
      "Hint: {hint}\n"
      "Candidate answer: {candidate}\n"
      "Does the hint apply to the candidate answer? Answer with Yes or No only.";
  // Same wording as the judgment so the relatedness call shares its cache entry.
  p.relatedness_template =
      "Question: {question}\n"
      "Hint: {hint}\n"
      "Candidate answer: {answer}\n"
      "Does the hint apply to the candidate answer? Answer with Yes or No only.";
  return p;
}

void CandidatePrompts::validate() const {
  check_template("generation", generation_template, {"question"}, {});
  check_template("judgment", judgment_template, {"hint", "candidate"}, {"question"});
  check_template("relatedness", relatedness_template, {"hint", "answer"}, {"question"});
}

std::string fill_template(std::string_view tmpl, std::string_view question, std::string_view hint,
                          std::string_view candidate, std::string_view answer) {
  std::string out;
  out.reserve(tmpl.size() + question.size() + hint.size() + candidate.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto name = tmpl.substr(i + 1, close - i - 1);
        const std::string_view* value = nullptr;
        if (name == "question") value = &question;
        else if (name == "hint") value = &hint;
        else if (name == "candidate") value = &candidate;
        else if (name == "answer") value = &answer;
        if (value != nullptr) {
          out.append(*value);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::vector<std::string> parse_candidates(std::string_view model_output) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto raw : detail::split_lines(model_output)) {
    auto line = detail::trim(raw);
    if (line.empty() || line.back() == ':') continue;
    auto text = strip_quotes(strip_trailing_punct(strip_quotes(strip_list_marker(line))));
    auto key = normalize(text);
    if (key.empty() || !seen.insert(key).second) continue;
    out.emplace_back(text);
    if (out.size() == kMaxCandidates) break;
  }
  return out;
}

Verdict parse_verdict(std::string_view model_output) {
  auto s = detail::trim(model_output);
  std::size_t i = 0;
  while (i < s.size() && !is_alpha(s[i])) ++i;
  std::size_t j = i;
  while (j < s.size() && is_alpha(s[j])) ++j;
  return detail::ascii_lower(s.substr(i, j - i)) == "yes" ? Verdict::Yes : Verdict::No;
}

double convergence_score(bool related, std::size_t yes_count, std::size_t candidate_count) {
  if (candidate_count == 0) throw std::invalid_argument("convergence_score: empty candidate set");
  if (!related) return 0.0;
  double v = static_cast<double>(yes_count);
  double c = static_cast<double>(candidate_count);
  return std::clamp(1.0 - (v - 1.0) / c, 0.0, 1.0);
}

CandidateSet generate_candidates(const Question& question, Gateway& gateway,
                                 const ConvergenceOptions& options) {
  const auto& p = options.prompts;
  auto req = make_request(options.generation_model, p,
                          fill_template(p.generation_template, question.text, "", "", ""),
                          options.generation_max_tokens, options);
  CandidateSet set{parse_candidates(gateway.chat(req).content)};
  if (options.append_gold && !gold_in(set.candidates, question.answer)) {
    set.candidates.push_back(question.answer.text);
  }
  if (set.candidates.empty()) throw EmptyCandidates();
  return set;
}

Verdict judge_applicability(std::string_view hint, std::string_view candidate,
                            const Question& question, Gateway& gateway,
                            const ConvergenceOptions& options) {
  if (detail::trim(hint).empty() || detail::trim(candidate).empty()) {
    throw std::invalid_argument("judge_applicability: empty hint or candidate");
  }
  const auto& p = options.prompts;
  auto req = make_request(options.judge_model, p,
                          fill_template(p.judgment_template, question.text, hint, candidate, ""),
                          options.judgment_max_tokens, options);
  return parse_verdict(gateway.chat(req).content);
}

bool is_related(std::string_view hint, const Question& question, Gateway& gateway,
                const ConvergenceOptions& options) {
  if (detail::trim(hint).empty()) throw std::invalid_argument("is_related: empty hint");
  const auto& p = options.prompts;
  auto req = make_request(
      options.judge_model, p,
      fill_template(p.relatedness_template, question.text, hint, "", question.answer.text),
      options.judgment_max_tokens, options);
  return parse_verdict(gateway.chat(req).content) == Verdict::Yes;
}

ConvergenceRecord score_hint(const Question& question, std::size_t hint_index,
                             const CandidateSet& candidates, Gateway& gateway,
                             const ConvergenceOptions& options) {
  if (hint_index >= question.hints.size()) {
    throw std::out_of_range("hint index " + std::to_string(hint_index) + " out of range for " +
                            question.id);
  }
  const auto& hint = question.hints[hint_index];

  ConvergenceRecord rec;
  rec.question_id = question.id;
  rec.hint_index = hint_index;
  rec.candidate_set = candidates;
  rec.related = is_related(hint, question, gateway, options);
  rec.judgments.reserve(candidates.size());
  for (const auto& c : candidates.candidates) {
    rec.judgments.push_back(judge_applicability(hint, c, question, gateway, options));
  }
  rec.score = convergence_score(rec.related, rec.yes_count(), candidates.size());
  return rec;
}

ConvergenceRecord score_hint(const Question& question, std::size_t hint_index, Gateway& gateway,
                             const ConvergenceOptions& options) {
  return score_hint(question, hint_index, generate_candidates(question, gateway, options), gateway,
                    options);
}

json to_json(const ConvergenceRecord& rec) {
  json judgments = json::array();
  for (auto v : rec.judgments) judgments.push_back(to_string(v));
  json j = json::object();
  j["question_id"] = rec.question_id;
  j["hint_index"] = rec.hint_index;
  j["candidates"] = rec.candidate_set.candidates;
  j["judgments"] = std::move(judgments);
  j["related"] = rec.related;
  j["score"] = rec.score;
  return j;
}

ConvergenceRecord convergence_record_from_json(const json& j) {
  ConvergenceRecord rec;
  rec.question_id = j.at("question_id").get<std::string>();
  rec.hint_index = j.at("hint_index").get<std::size_t>();
  rec.candidate_set.candidates = j.at("candidates").get<std::vector<std::string>>();
  for (const auto& v : j.at("judgments")) {
    rec.judgments.push_back(v.get<std::string>() == "Yes" ? Verdict::Yes : Verdict::No);
  }
  rec.related = j.at("related").get<bool>();
  rec.score = j.at("score").get<double>();
  if (rec.judgments.size() != rec.candidate_set.size()) {
    throw Error("ledger row for " + rec.question_id + "#" + std::to_string(rec.hint_index) +
                ": judgments and candidates differ in length");
  }
  return rec;
}

std::vector<ConvergenceRow> read_convergence_ledger(const std::filesystem::path& path) {
  std::vector<ConvergenceRow> rows;
  for (const auto& j : detail::read_jsonl(path)) {
    ConvergenceRow row;
    row.question_id = j.at("question_id").get<std::string>();
    row.hint_index = j.at("hint_index").get<std::size_t>();
    if (j.contains("error")) {
      row.error = j.at("error").get<std::string>();
    } else {
      row.record = convergence_record_from_json(j);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ScoreCorpusResult score_corpus(const Corpus& corpus, Gateway& gateway,
                               const ScoreCorpusOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("score_corpus: empty corpus");
  options.convergence.prompts.validate();

  ScoreCorpusResult result;
  std::set<std::pair<std::string, std::size_t>> done;
  if (options.resume) {
    for (auto& row : read_convergence_ledger(options.ledger_path)) {
      if (!row.record) continue;
      if (done.emplace(row.question_id, row.hint_index).second) {
        result.records.push_back(std::move(*row.record));
      }
    }
  }
  detail::JsonlWriter ledger(options.ledger_path, options.resume);

  auto error_row = [](const Question& q, std::size_t idx, const std::string& msg) {
    json j = json::object();
    j["question_id"] = q.id;
    j["hint_index"] = idx;
    j["error"] = msg;
    return j;
  };

  for (const auto& q : corpus.questions()) {
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < q.hints.size(); ++i) {
      if (done.contains({q.id, i})) {
        ++result.skipped;
      } else {
        pending.push_back(i);
      }
    }
    if (pending.empty()) continue;

    CandidateSet candidates;
    try {
      candidates = generate_candidates(q, gateway, options.convergence);
    } catch (const std::exception& e) {
      for (auto idx : pending) {
        ledger.write(error_row(q, idx, std::string("candidate generation: ") + e.what()));
        ++result.errors;
      }
      continue;
    }

    std::vector<std::optional<ConvergenceRecord>> records(pending.size());
    std::vector<std::string> errors(pending.size());
    detail::parallel_for(pending.size(), options.concurrency, [&](std::size_t k) {
      try {
        records[k] = score_hint(q, pending[k], candidates, gateway, options.convergence);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    });

    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (records[k]) {
        ledger.write(to_json(*records[k]));
        result.records.push_back(std::move(*records[k]));
      } else {
        ledger.write(error_row(q, pending[k], errors[k]));
        ++result.errors;
      }
    }
  }
  return result;
}

}  // namespace hintqa
