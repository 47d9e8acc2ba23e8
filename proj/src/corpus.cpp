#include "hintqa/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "hintqa/errors.hpp"
#include "hintqa/metrics.hpp"
#include "util.hpp"

namespace hintqa {
namespace {

using nlohmann::json;

std::string required_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw MalformedRecord(line_no, std::string("missing string field \"") + field + "\"");
  }
  auto value = it->get<std::string>();
  if (detail::trim(value).empty()) {
    throw MalformedRecord(line_no, std::string("empty field \"") + field + "\"");
  }
  return value;
}

Question parse_record(const json& j, std::size_t line_no) {
  if (!j.is_object()) throw MalformedRecord(line_no, "record is not a JSON object");

  Question q;
  q.id = required_string(j, "id", line_no);
  q.text = required_string(j, "question", line_no);

  auto ans = j.find("answer");
  if (ans == j.end() || !ans->is_object()) {
    throw MalformedRecord(line_no, "missing object field \"answer\"");
  }
  q.answer.text = required_string(*ans, "text", line_no);
  if (auto al = ans->find("aliases"); al != ans->end()) {
    if (!al->is_array()) throw MalformedRecord(line_no, "\"aliases\" is not an array");
    std::set<std::string> seen;
    for (const auto& a : *al) {
      if (!a.is_string()) throw MalformedRecord(line_no, "alias is not a string");
      auto alias = a.get<std::string>();
      if (!seen.insert(normalize(alias)).second) {
        throw MalformedRecord(line_no, "duplicate alias after normalization: \"" + alias + "\"");
      }
      q.answer.aliases.push_back(std::move(alias));
    }
  }

  auto hints = j.find("hints");
  if (hints == j.end() || !hints->is_array()) {
    throw MalformedRecord(line_no, "missing array field \"hints\"");
  }
  if (hints->empty()) throw MalformedRecord(line_no, "\"hints\" is empty");
  for (const auto& h : *hints) {
    if (!h.is_string() || detail::trim(h.get_ref<const std::string&>()).empty()) {
      throw MalformedRecord(line_no, "hint is not a non-empty string");
    }
    q.hints.push_back(h.get<std::string>());
  }
  return q;
}

}  // namespace

Corpus::Corpus(std::vector<Question> questions, std::string source_path)
    : questions_(std::move(questions)), source_path_(std::move(source_path)) {
  std::unordered_set<std::string_view> ids;
  for (const auto& q : questions_) {
    if (!ids.insert(q.id).second) throw DuplicateId(q.id);
  }
}

const Question* Corpus::find(std::string_view id) const {
  for (const auto& q : questions_) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

Corpus parse_corpus(std::istream& in, std::string source_path) {
  std::vector<Question> questions;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
    }
    auto q = parse_record(j, line_no);
    if (!ids.insert(q.id).second) throw DuplicateId(q.id);
    questions.push_back(std::move(q));
  }
  return Corpus(std::move(questions), std::move(source_path));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return parse_corpus(in, path.string());
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& q : corpus.questions()) {
    json j = json::object();
    j["id"] = q.id;
    j["question"] = q.text;
    j["answer"] = {{"text", q.answer.text}, {"aliases", q.answer.aliases}};
    j["hints"] = q.hints;
    out << j.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_corpus(corpus, out);
}

FilterResult filter_by_min_hints(const Corpus& corpus, std::size_t min_hints) {
  std::vector<Question> kept;
  std::size_t dropped = 0;
  for (const auto& q : corpus.questions()) {
    if (q.hints.size() >= min_hints) {
      kept.push_back(q);
    } else {
      ++dropped;
    }
  }
  return {Corpus(std::move(kept), corpus.source_path()), dropped};
}

}  // namespace hintqa
