#include "hintqa/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>

#include "hintqa/errors.hpp"
#include "hintqa/subsets.hpp"
#include "util.hpp"

namespace hintqa {
namespace {

struct Value {
  enum class Kind { Scalar, String, List } kind = Kind::Scalar;
  std::string text;
  std::vector<Value> items;
};

class Parser {
 public:
  Parser(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

  Value value() {
    skip_space();
    if (at_end()) fail("missing value");
    if (peek() == '[') return list();
    if (peek() == '"') return quoted();
    auto start = pos_;
    while (!at_end() && peek() != ',' && peek() != ']' && peek() != '#') ++pos_;
    Value v;
    v.text = std::string(detail::trim(s_.substr(start, pos_ - start)));
    if (v.text.empty()) fail("missing value");
    return v;
  }

  void expect_end() {
    skip_space();
    if (!at_end() && peek() != '#') fail("unexpected text after value");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("config line " + std::to_string(line_no_) + ": " + why);
  }

 private:
  Value list() {
    ++pos_;
    Value v;
    v.kind = Value::Kind::List;
    skip_space();
    if (!at_end() && peek() == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.items.push_back(value());
      if (v.items.back().kind == Value::Kind::List) fail("nested lists are not supported");
      skip_space();
      if (at_end()) fail("unterminated list");
      char c = s_[pos_++];
      if (c == ']') return v;
      if (c != ',') fail("expected ',' or ']' in list");
    }
  }

  Value quoted() {
    ++pos_;
    Value v;
    v.kind = Value::Kind::String;
    while (true) {
      if (at_end()) fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') return v;
      if (c != '\\') {
        v.text += c;
        continue;
      }
      if (at_end()) fail("unterminated escape");
      switch (char e = s_[pos_++]) {
        case 'n': v.text += '\n'; break;
        case 't': v.text += '\t'; break;
        case '"':
        case '\\': v.text += e; break;
        default: fail(std::string("unknown escape \\") + e);
      }
    }
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  void skip_space() {
    while (!at_end() && detail::is_space(peek())) ++pos_;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_no_;
};

struct Entry {
  Value value;
  std::size_t line_no;
};

[[noreturn]] void bad_value(const std::string& key, const Entry& e, const std::string& want) {
  throw ConfigError("config line " + std::to_string(e.line_no) + ": " + key + " expects " + want);
}

const std::string& scalar(const std::string& key, const Entry& e) {
  if (e.value.kind == Value::Kind::List) bad_value(key, e, "a single value");
  return e.value.text;
}

std::uint64_t as_uint(const std::string& key, const Entry& e) {
  const auto& t = scalar(key, e);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) bad_value(key, e, "a non-negative integer");
  return v;
}

std::int64_t as_int(const std::string& key, const Entry& e) {
  const auto& t = scalar(key, e);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) bad_value(key, e, "an integer");
  return v;
}

double as_double(const std::string& key, const Entry& e) {
  const auto& t = scalar(key, e);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) bad_value(key, e, "a number");
  return v;
}

bool as_bool(const std::string& key, const Entry& e) {
  const auto& t = scalar(key, e);
  if (e.value.kind == Value::Kind::Scalar && t == "true") return true;
  if (e.value.kind == Value::Kind::Scalar && t == "false") return false;
  bad_value(key, e, "true or false");
}

std::vector<std::string> as_strings(const Entry& e) {
  if (e.value.kind != Value::Kind::List) return {e.value.text};
  std::vector<std::string> out;
  for (const auto& item : e.value.items) out.push_back(item.text);
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::Http: return "http";
    case ProviderKind::World: return "world";
    case ProviderKind::Scripted: return "scripted";
  }
  return "http";
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : detail::split_lines(text)) {
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    Parser parser(line, line_no);
    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string_view::npos) parser.fail("unterminated section header");
      auto rest = detail::trim(line.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') parser.fail("unexpected text after section header");
      section = std::string(detail::trim(line.substr(1, close - 1)));
      if (section.empty()) parser.fail("empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) parser.fail("expected key = value");
    auto key = std::string(detail::trim(line.substr(0, eq)));
    if (key.empty()) parser.fail("empty key");
    if (!section.empty()) key = section + "." + key;
    Parser vp(line.substr(eq + 1), line_no);
    Entry entry{vp.value(), line_no};
    vp.expect_end();
    if (!entries.emplace(key, std::move(entry)).second) parser.fail("duplicate key " + key);
  }

  RunConfig c;
  c.cache_dir = resolve(base_dir, c.cache_dir.string());
  c.out_dir = resolve(base_dir, c.out_dir.string());
  using Setter = std::function<void(const std::string&, const Entry&)>;
  auto path_of = [&](std::filesystem::path RunConfig::*field) -> Setter {
    return [&c, &base_dir, field](const std::string& k, const Entry& e) {
      c.*field = resolve(base_dir, scalar(k, e));
    };
  };
  auto string_of = [&](std::string RunConfig::*field) -> Setter {
    return [&c, field](const std::string& k, const Entry& e) { c.*field = scalar(k, e); };
  };

  const std::map<std::string, Setter> setters{
      {"dataset", path_of(&RunConfig::dataset)},
      {"cache_dir", path_of(&RunConfig::cache_dir)},
      {"out_dir", path_of(&RunConfig::out_dir)},
      {"provider.kind",
       [&](const std::string& k, const Entry& e) {
         const auto& v = scalar(k, e);
         if (v == "http") c.provider = ProviderKind::Http;
         else if (v == "world") c.provider = ProviderKind::World;
         else if (v == "scripted") c.provider = ProviderKind::Scripted;
         else bad_value(k, e, "http, world or scripted");
       }},
      {"provider.base_url", string_of(&RunConfig::base_url)},
      {"provider.embedding_base_url", string_of(&RunConfig::embedding_base_url)},
      {"provider.world_file", path_of(&RunConfig::world_file)},
      {"provider.script_file", path_of(&RunConfig::script_file)},
      {"models.scorer", string_of(&RunConfig::scorer_model)},
      {"models.judge", string_of(&RunConfig::judge_model)},
      {"models.embedding", string_of(&RunConfig::embedding_model)},
      {"models.answer",
       [&](const std::string&, const Entry& e) { c.answer_models = as_strings(e); }},
      {"selection.subset_sizes",
       [&](const std::string& k, const Entry& e) {
         c.subset_sizes.clear();
         if (e.value.kind != Value::Kind::List) {
           c.subset_sizes.insert(as_uint(k, e));
           return;
         }
         for (const auto& item : e.value.items) c.subset_sizes.insert(as_uint(k, {item, e.line_no}));
       }},
      {"selection.group_size",
       [&](const std::string& k, const Entry& e) { c.group_size = as_uint(k, e); }},
      {"selection.min_hints",
       [&](const std::string& k, const Entry& e) { c.min_hints = as_uint(k, e); }},
      {"selection.methods",
       [&](const std::string& k, const Entry& e) {
         c.methods.clear();
         for (const auto& s : as_strings(e)) {
           if (s == "both") {
             c.methods = {Method::Convergence, Method::CosineSimilarity};
             continue;
           }
           auto m = parse_method(s);
           if (!m) bad_value(k, e, "convergence, cosine or both");
           c.methods.push_back(*m);
         }
       }},
      {"selection.orderings",
       [&](const std::string& k, const Entry& e) {
         c.orderings.clear();
         for (const auto& s : as_strings(e)) {
           auto o = parse_ordering(s);
           if (!o) bad_value(k, e, "canonical, asc or desc");
           c.orderings.push_back(*o);
         }
       }},
      {"prompting.shots", [&](const std::string& k, const Entry& e) { c.shots = as_uint(k, e); }},
      {"prompting.shots_file", path_of(&RunConfig::shots_file)},
      {"prompting.prompts_file", path_of(&RunConfig::prompts_file)},
      {"prompting.temperature",
       [&](const std::string& k, const Entry& e) { c.temperature = as_double(k, e); }},
      {"prompting.seed", [&](const std::string& k, const Entry& e) { c.seed = as_int(k, e); }},
      {"run.sample", [&](const std::string& k, const Entry& e) { c.sample = as_uint(k, e); }},
      {"run.concurrency",
       [&](const std::string& k, const Entry& e) { c.concurrency = as_uint(k, e); }},
      {"run.resume", [&](const std::string& k, const Entry& e) { c.resume = as_bool(k, e); }},
      {"run.aggregate",
       [&](const std::string& k, const Entry& e) {
         const auto& v = scalar(k, e);
         if (v == "passage") c.aggregate = AggregationUnit::Passage;
         else if (v == "question") c.aggregate = AggregationUnit::Question;
         else bad_value(k, e, "passage or question");
       }},
      {"run.retry_backoff_ms",
       [&](const std::string& k, const Entry& e) {
         c.retry_backoff.clear();
         auto items = e.value.kind == Value::Kind::List ? e.value.items : std::vector<Value>{e.value};
         for (const auto& item : items) {
           c.retry_backoff.emplace_back(static_cast<std::int64_t>(as_uint(k, {item, e.line_no})));
         }
       }},
  };

  for (const auto& [key, entry] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("config line " + std::to_string(entry.line_no) + ": unknown key " + key);
    }
    it->second(key, entry);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const std::exception&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_config(text, path.parent_path());
}

void finalize_config(RunConfig& c, bool need_dataset) {
  if (c.judge_model.empty()) c.judge_model = c.scorer_model;
  if (c.embedding_base_url.empty()) c.embedding_base_url = c.base_url;
  if (c.concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (c.group_size < 1) throw ConfigError("group_size must be at least 1");
  if (c.subset_sizes.empty() || *c.subset_sizes.begin() == 0) {
    throw ConfigError("subset_sizes must be non-empty and positive");
  }
  if (c.methods.empty()) throw ConfigError("at least one selection method is required");
  if (c.orderings.empty()) throw ConfigError("at least one ordering is required");
  if (c.min_hints == 0) c.min_hints = min_hints_for_groups(c.subset_sizes, c.group_size);

  auto require_file = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string(what) + " is not set");
    if (!std::filesystem::is_regular_file(p)) {
      throw ConfigError(std::string(what) + " not found: " + p.string());
    }
  };
  switch (c.provider) {
    case ProviderKind::Http: {
      if (c.base_url.empty()) throw ConfigError("provider.base_url is required for http");
      const char* key = std::getenv("LLM_API_KEY");
      if (key == nullptr || *key == '\0') {
        throw ConfigError("LLM_API_KEY is not set; the http provider needs a credential");
      }
      c.api_key = key;
      break;
    }
    case ProviderKind::World: require_file(c.world_file, "provider.world_file"); break;
    case ProviderKind::Scripted: require_file(c.script_file, "provider.script_file"); break;
  }
  if (need_dataset) require_file(c.dataset, "dataset");
  if (!c.shots_file.empty()) require_file(c.shots_file, "prompting.shots_file");
  if (!c.prompts_file.empty()) require_file(c.prompts_file, "prompting.prompts_file");
}

}  // namespace hintqa
