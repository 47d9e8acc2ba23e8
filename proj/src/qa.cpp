#include "hintqa/qa.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "hintqa/errors.hpp"
#include "util.hpp"

namespace hintqa {
namespace {

using nlohmann::json;

constexpr std::size_t kLedgerChunk = 256;

bool starts_with_any(std::string_view s, std::initializer_list<std::string_view> prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](std::string_view p) { return s.starts_with(p); });
}

bool contains_word(std::string_view s, std::string_view word) {
  auto is_letter = [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); };
  for (auto pos = s.find(word); pos != std::string_view::npos; pos = s.find(word, pos + 1)) {
    bool left = pos == 0 || !is_letter(s[pos - 1]);
    bool right = pos + word.size() == s.size() || !is_letter(s[pos + word.size()]);
    if (left && right) return true;
  }
  return false;
}

bool is_refusal(std::string_view lowered) {
  return contains_word(lowered, "sorry") ||
         starts_with_any(lowered, {"i cannot", "i can't", "i can not", "i am unable",
                                   "i'm unable", "i am not able", "i'm not able"});
}

std::string_view strip_quote_pair(std::string_view s) {
  static constexpr std::pair<std::string_view, std::string_view> kPairs[] = {
      {"\"", "\""}, {"'", "'"}, {"`", "`"}, {"“", "”"}, {"‘", "’"}};
  for (auto [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      return s.substr(open.size(), s.size() - open.size() - close.size());
    }
  }
  return s;
}

using PassageKey = std::tuple<std::string, Method, Group, Ordering, IndexTuple>;

PassageKey key_of(const std::string& question_id, const PassageRef& ref) {
  return {question_id, ref.method, ref.group, ref.ordering, ref.hint_indices};
}

}  // namespace

void FewShotExemplar::validate() const {
  if (detail::trim(context).empty() || detail::trim(question).empty() ||
      detail::trim(answer).empty()) {
    throw ConfigError("few-shot exemplar with an empty field");
  }
  if (answer.find('\n') != std::string::npos) {
    throw ConfigError("few-shot exemplar answer spans several lines: " + answer);
  }
}

const std::vector<FewShotExemplar>& default_shots() {
  static const std::vector<FewShotExemplar> shots{
      {"He was the 44th President of the United States.\n"
       "He served as President from 2009 to 2017.\n"
       "He was the first African-American President of the United States.\n"
       "He was a member of the Democratic Party.\n"
       "He was born on August 4, 1961 in Honolulu, Hawaii.",
       "Who won the Nobel Peace Prize in 2009?", "Barack Obama"},
      {"This planet is the fourth from the Sun.\n"
       "It is often called the Red Planet.\n"
       "It has two small moons named Phobos and Deimos.",
       "Which planet did the Curiosity rover land on in 2012?", "Mars"},
      {"He painted the ceiling of the Sistine Chapel.\n"
       "He sculpted the statue of David.\n"
       "He was born in Caprese in 1475.",
       "Which Renaissance artist designed the dome of St. Peter's Basilica?", "Michelangelo"},
      {"It is a popular pastime around the world.\n"
       "Many people enjoy it on weekends.\n"
       "It can be done alone or in groups.",
       "Which city hosted the first modern Olympic Games?", "NO ANSWER"},
      {"This element has the chemical symbol Au.\n"
       "It is a precious yellow metal.\n"
       "Its atomic number is 79.",
       "Which metal is traditionally awarded for first place at the Olympic Games?", "Gold"},
  };
  return shots;
}

std::vector<FewShotExemplar> load_shots(const std::filesystem::path& path) {
  std::vector<FewShotExemplar> shots;
  try {
    auto j = json::parse(detail::read_file(path));
    for (const auto& s : j) {
      FewShotExemplar e{s.at("context").get<std::string>(), s.at("question").get<std::string>(),
                        s.at("answer").get<std::string>()};
      e.validate();
      shots.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed shots file " + path.string() + ": " + e.what());
  }
  return shots;
}

ChatRequest build_prompt(std::string_view passage_text, const Question& question,
                         const std::vector<FewShotExemplar>& shots, const QaOptions& options) {
  if (shots.size() < options.shot_count) {
    throw std::invalid_argument("build_prompt: " + std::to_string(options.shot_count) +
                                " shots requested, " + std::to_string(shots.size()) +
                                " available");
  }
  std::ostringstream user;
  user << kQaConditions << "\n\n";
  for (std::size_t i = 0; i < options.shot_count; ++i) {
    const auto& s = shots[i];
    user << "[Shot " << (i + 1) << "]\n"
         << "Context:\n"
         << s.context << "\n"
         << "Question: " << s.question << "\n"
         << "Assistant: " << s.answer << "\n\n";
  }
  user << "Context:\n" << passage_text << "\n" << "Question: " << question.text;

  ChatRequest req;
  req.model = options.model;
  req.messages.push_back({Role::System, std::string(kQaSystemPrompt)});
  req.messages.push_back({Role::User, user.str()});
  req.temperature = options.temperature;
  req.max_tokens = options.max_tokens;
  req.seed = options.seed;
  return req;
}

ChatRequest build_prompt(const PassageInstance& passage, const Question& question,
                         const std::vector<FewShotExemplar>& shots, const QaOptions& options) {
  return build_prompt(passage.text, question, shots, options);
}

ExtractedAnswer extract_answer(std::string_view raw) {
  std::string_view line;
  for (auto l : detail::split_lines(raw)) {
    l = detail::trim(l);
    if (!l.empty()) {
      line = l;
      break;
    }
  }
  if (line.empty()) return {std::string(kNoAnswer), true, true};

  // Peel quotes and trailing periods until stable so the result is a fixed point.
  while (true) {
    auto next = detail::trim(strip_quote_pair(line));
    while (!next.empty() && next.back() == '.') next = detail::trim(next.substr(0, next.size() - 1));
    if (next == line) break;
    line = next;
  }
  if (line.empty()) return {std::string(kNoAnswer), true, true};

  auto lowered = detail::ascii_lower(line);
  if (lowered == "no answer" || is_refusal(lowered)) return {std::string(kNoAnswer), true, false};
  return {std::string(line), false, false};
}

json to_json(const QAPrediction& p) {
  json j = json::object();
  j["question_id"] = p.question_id;
  j["method"] = to_string(p.passage.method);
  j["group"] = to_string(p.passage.group);
  j["ordering"] = to_string(p.passage.ordering);
  j["hint_indices"] = p.passage.hint_indices;
  j["model"] = p.model;
  j["raw_output"] = p.raw_output;
  j["answer"] = p.answer;
  j["abstained"] = p.abstained;
  if (p.empty_output) j["empty_output"] = true;
  if (!p.error.empty()) j["error"] = p.error;
  return j;
}

QAPrediction prediction_from_json(const json& j) {
  QAPrediction p;
  p.question_id = j.at("question_id").get<std::string>();
  auto method = parse_method(j.at("method").get<std::string>());
  auto group = parse_group(j.at("group").get<std::string>());
  auto ordering = parse_ordering(j.at("ordering").get<std::string>());
  if (!method || !group || !ordering) throw Error("prediction row with unknown label: " + j.dump());
  p.passage = {*method, *group, *ordering, j.at("hint_indices").get<IndexTuple>()};
  p.model = j.value("model", "");
  p.raw_output = j.value("raw_output", "");
  p.answer = j.value("answer", "");
  p.abstained = j.value("abstained", false);
  p.empty_output = j.value("empty_output", false);
  p.error = j.value("error", "");
  return p;
}

std::vector<QAPrediction> read_prediction_ledger(const std::filesystem::path& path) {
  std::vector<QAPrediction> out;
  for (const auto& j : detail::read_jsonl(path)) out.push_back(prediction_from_json(j));
  return out;
}

AnswerResult answer_passages(const std::vector<PassageInstance>& passages, const Corpus& corpus,
                             Gateway& gateway, const AnswerOptions& options) {
  std::vector<const Question*> questions;
  questions.reserve(passages.size());
  for (const auto& p : passages) {
    const auto* q = corpus.find(p.question_id);
    if (q == nullptr) throw UnknownQuestion(p.question_id);
    questions.push_back(q);
  }
  for (std::size_t i = 0; i < options.qa.shot_count && i < options.shots.size(); ++i) {
    options.shots[i].validate();
  }

  AnswerResult result;
  std::set<PassageKey> done;
  if (options.resume) {
    for (auto& p : read_prediction_ledger(options.ledger_path)) {
      if (p.model != options.qa.model || !p.error.empty()) continue;
      if (done.insert(key_of(p.question_id, p.passage)).second) {
        result.predictions.push_back(std::move(p));
      }
    }
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (done.contains(key_of(passages[i].question_id, passages[i].ref()))) {
      ++result.skipped;
    } else {
      todo.push_back(i);
    }
  }

  detail::JsonlWriter ledger(options.ledger_path, true);
  for (std::size_t start = 0; start < todo.size(); start += kLedgerChunk) {
    auto n = std::min(kLedgerChunk, todo.size() - start);
    std::vector<QAPrediction> chunk(n);
    detail::parallel_for(n, options.concurrency, [&](std::size_t k) {
      auto idx = todo[start + k];
      const auto& passage = passages[idx];
      auto& pred = chunk[k];
      pred.question_id = passage.question_id;
      pred.passage = passage.ref();
      pred.model = options.qa.model;
      try {
        auto req = build_prompt(passage, *questions[idx], options.shots, options.qa);
        pred.raw_output = gateway.chat(req).content;
        auto ex = extract_answer(pred.raw_output);
        pred.answer = std::move(ex.answer);
        pred.abstained = ex.abstained;
        pred.empty_output = ex.empty_output;
      } catch (const std::exception& e) {
        pred.error = e.what();
      }
    });
    for (auto& pred : chunk) {
      ledger.write(to_json(pred));
      if (pred.error.empty()) {
        result.predictions.push_back(std::move(pred));
      } else {
        ++result.errors;
      }
    }
  }
  return result;
}

}  // namespace hintqa
