#include "hintqa/testworld.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>

#include "hintqa/convergence.hpp"
#include "hintqa/errors.hpp"
#include "hintqa/qa.hpp"
#include "hintqa/similarity.hpp"
#include "util.hpp"

namespace hintqa::testworld {
namespace {

using nlohmann::json;

constexpr std::size_t kHintsPerKind = 3;

/// Bounded draws written out by hand: std::uniform_int_distribution is not
/// specified bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

constexpr std::string_view kSyllables[] = {"ka", "lo", "mer", "vin", "sa",  "tor", "el",
                                           "dra", "mu", "quel", "ri", "zan", "bo", "fen",
                                           "ith", "gor", "na", "pel", "ul", "ves"};
constexpr std::string_view kNouns[] = {"emblem", "harbor", "festival", "river",  "guild",
                                       "anthem", "mineral", "dialect", "bridge", "orchard"};

std::string pseudo_word(Rng& rng, std::size_t syllables) {
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) w += kSyllables[rng.below(std::size(kSyllables))];
  return w;
}

std::string capitalized(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

/// The text after "<label>" up to the end of its line.
std::optional<std::string> line_value(std::string_view text, std::string_view label) {
  auto pos = text.find(label);
  if (pos == std::string_view::npos) return std::nullopt;
  auto start = pos + label.size();
  auto end = text.find('\n', start);
  return std::string(detail::trim(text.substr(start, end == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : end - start)));
}

class WorldProvider final : public Provider {
 public:
  explicit WorldProvider(World world) : world_(std::move(world)) {
    for (const auto& [question, gold] : world_.gold_by_question) {
      if (world_.find(gold) == nullptr) throw UnknownEntity(gold);
    }
    for (const auto& e : world_.entities) {
      for (const auto& a : e.attributes) ++holders_[a];
    }
    endpoint_ = "world://" + sha256_hex(to_json(world_).dump()).substr(0, 16);
  }

  std::string endpoint() const override { return endpoint_; }

  ChatResponse chat(const ChatRequest& req) override {
    const ChatMessage* user = nullptr;
    bool qa = false;
    for (const auto& m : req.messages) {
      if (m.role == Role::System && m.content == kQaSystemPrompt) qa = true;
      if (m.role == Role::User) user = &m;
    }
    if (user == nullptr) throw ScriptMiss(render_request(req));
    const auto& text = user->content;

    if (qa) return {answer(text, req), FinishReason::Stop, false};

    auto hint = line_value(text, "Hint: ");
    auto candidate = line_value(text, "Candidate answer: ");
    if (hint && candidate) {
      const auto* e = world_.find(*candidate);
      bool yes = e != nullptr && e->attributes.contains(*hint);
      return {yes ? "Yes" : "No", FinishReason::Stop, false};
    }

    if (text.find("Potential answers") != std::string::npos) {
      std::string out;
      auto n = std::min(world_.entities.size(), kMaxCandidates);
      for (std::size_t i = 0; i < n; ++i) {
        out += std::to_string(i + 1) + ". " + world_.entities[i].name + "\n";
      }
      return {out, FinishReason::Stop, false};
    }
    throw ScriptMiss(render_request(req));
  }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string&) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hash_embedding(t));
    return out;
  }

 private:
  std::string answer(const std::string& text, const ChatRequest& req) const {
    auto ctx = text.rfind("Context:\n");
    auto qpos = text.rfind("\nQuestion: ");
    if (ctx == std::string::npos || qpos == std::string::npos || qpos < ctx) {
      throw ScriptMiss(render_request(req));
    }
    auto question = std::string(detail::trim(std::string_view(text).substr(qpos + 11)));
    auto gold_it = world_.gold_by_question.find(question);
    if (gold_it == world_.gold_by_question.end()) throw ScriptMiss(render_request(req));
    const auto* gold = world_.find(gold_it->second);

    auto passage = std::string_view(text).substr(ctx + 9, qpos - ctx - 9);
    for (auto line : detail::split_lines(passage)) {
      std::string l(detail::trim(line));
      auto h = holders_.find(l);
      if (h != holders_.end() && h->second == 1 && gold->attributes.contains(l)) {
        return gold->name;
      }
    }
    return std::string(kWrongAnswer);
  }

  World world_;
  std::unordered_map<std::string, std::size_t> holders_;
  std::string endpoint_;
};

}  // namespace

const WorldEntity* World::find(std::string_view name) const {
  for (const auto& e : entities) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::size_t World::holders(std::string_view attribute) const {
  std::string a(attribute);
  return static_cast<std::size_t>(std::count_if(
      entities.begin(), entities.end(),
      [&](const WorldEntity& e) { return e.attributes.contains(a); }));
}

std::shared_ptr<Provider> world_provider(const World& world) {
  return std::make_shared<WorldProvider>(world);
}

GeneratedWorld generate_world(std::uint64_t seed, std::size_t n_entities,
                              std::size_t n_attributes, std::size_t n_questions) {
  if (n_entities < 2) throw std::invalid_argument("generate_world: need at least 2 entities");
  if (n_attributes < kHintsPerKind) {
    throw std::invalid_argument("generate_world: need at least 3 attributes per entity");
  }
  if (n_questions == 0) n_questions = n_entities;

  Rng rng(seed);
  std::set<std::string> used;
  auto fresh = [&](std::size_t syllables) {
    for (std::size_t attempt = 1;; ++attempt) {
      // Lengthen words once short ones are exhausted.
      auto w = pseudo_word(rng, syllables + attempt / 64);
      if (used.insert(w).second) return w;
    }
  };

  GeneratedWorld out;
  auto& entities = out.world.entities;
  std::vector<std::vector<std::string>> unique(n_entities);
  for (std::size_t i = 0; i < n_entities; ++i) {
    WorldEntity e{capitalized(fresh(3)), {}};
    for (std::size_t a = 0; a < n_attributes; ++a) {
      auto attr = "Its " + std::string(kNouns[rng.below(std::size(kNouns))]) + " is called " +
                  capitalized(fresh(3)) + ".";
      e.attributes.insert(attr);
      unique[i].push_back(std::move(attr));
    }
    entities.push_back(std::move(e));
  }

  // Shared facts are held by the gold plus at least n/2 other entities, so
  // their score 1 - others/n stays at or below 0.5.
  const std::size_t min_others = (n_entities + 1) / 2;
  const std::size_t max_others = n_entities - 1;

  std::vector<Question> questions;
  for (std::size_t j = 0; j < n_questions; ++j) {
    std::size_t gold = j % n_entities;
    std::vector<std::string> hints;

    auto own = unique[gold];
    rng.shuffle(own);
    hints.insert(hints.end(), own.begin(), own.begin() + kHintsPerKind);

    for (std::size_t s = 0; s < kHintsPerKind; ++s) {
      std::size_t others = min_others + rng.below(max_others - min_others + 1);
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < n_entities; ++i) {
        if (i != gold) pool.push_back(i);
      }
      rng.shuffle(pool);
      auto attr = "It shares the " + std::string(kNouns[rng.below(std::size(kNouns))]) + " " +
                  capitalized(fresh(2)) + ".";
      entities[gold].attributes.insert(attr);
      for (std::size_t k = 0; k < others; ++k) entities[pool[k]].attributes.insert(attr);
      hints.push_back(std::move(attr));
    }

    for (std::size_t u = 0; u < kHintsPerKind;) {
      std::size_t other = (gold + 1 + rng.below(n_entities - 1)) % n_entities;
      const auto& attr = unique[other][rng.below(unique[other].size())];
      if (std::find(hints.begin(), hints.end(), attr) != hints.end()) continue;
      hints.push_back(attr);
      ++u;
    }
    rng.shuffle(hints);

    char id[32];
    std::snprintf(id, sizeof id, "q%03zu", j + 1);
    Question q;
    q.id = id;
    q.text = "Which entity is described by clue set " + std::to_string(j + 1) + "?";
    q.answer.text = entities[gold].name;
    q.hints = std::move(hints);
    out.world.gold_by_question[q.text] = entities[gold].name;
    questions.push_back(std::move(q));
  }
  out.corpus = Corpus(std::move(questions), "testworld");
  return out;
}

json to_json(const World& world) {
  json entities = json::array();
  for (const auto& e : world.entities) {
    entities.push_back({{"name", e.name}, {"attributes", e.attributes}});
  }
  return {{"entities", std::move(entities)}, {"gold_by_question", world.gold_by_question}};
}

World world_from_json(const json& j) {
  World w;
  try {
    for (const auto& e : j.at("entities")) {
      WorldEntity entity{e.at("name").get<std::string>(),
                         e.at("attributes").get<std::set<std::string>>()};
      if (entity.attributes.empty()) throw Error("entity without attributes: " + entity.name);
      if (w.find(entity.name) != nullptr) throw Error("duplicate entity: " + entity.name);
      w.entities.push_back(std::move(entity));
    }
    w.gold_by_question = j.at("gold_by_question").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed world file: ") + e.what());
  }
  return w;
}

World load_world(const std::filesystem::path& path) {
  return world_from_json(json::parse(detail::read_file(path)));
}

void save_world(const World& world, const std::filesystem::path& path) {
  detail::write_file(path, to_json(world).dump(2) + "\n");
}

}  // namespace hintqa::testworld
