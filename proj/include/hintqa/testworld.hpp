#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hintqa/corpus.hpp"
#include "hintqa/gateway.hpp"

namespace hintqa::testworld {

struct WorldEntity {
  std::string name;
  std::set<std::string> attributes;

  friend bool operator==(const WorldEntity&, const WorldEntity&) = default;
};

/// Closed world of entities plus the gold entity of every question (keyed by
/// question text, which is what the answering prompt carries).
struct World {
  std::vector<WorldEntity> entities;
  std::map<std::string, std::string> gold_by_question;

  const WorldEntity* find(std::string_view name) const;
  /// Number of entities holding `attribute`.
  std::size_t holders(std::string_view attribute) const;

  friend bool operator==(const World&, const World&) = default;
};

/// Answer returned when the passage does not single out the gold entity.
inline constexpr std::string_view kWrongAnswer = "Nobody";

/// Scripted provider for a world:
///  - candidate generation lists the entity names (first kMaxCandidates),
///  - a judgment is Yes iff the hint is one of the candidate's attributes,
///  - the answerer returns the gold name iff some passage line is an
///    attribute held by the gold entity alone, otherwise kWrongAnswer,
///  - embeddings come from hash_embedding.
/// Throws UnknownEntity if a gold entry names a missing entity.
std::shared_ptr<Provider> world_provider(const World& world);

struct GeneratedWorld {
  World world;
  Corpus corpus;
};

/// Seeded, platform-stable world. Each question gets nine hints: three held
/// only by its gold entity (score 1), three shared by the gold and at least
/// half of the other entities (score <= 0.5), and three taken from other
/// entities (unrelated, score 0), in shuffled order. `n_questions` = 0 means
/// one question per entity.
GeneratedWorld generate_world(std::uint64_t seed, std::size_t n_entities,
                              std::size_t n_attributes, std::size_t n_questions = 0);

nlohmann::json to_json(const World& world);
World world_from_json(const nlohmann::json& j);
World load_world(const std::filesystem::path& path);
void save_world(const World& world, const std::filesystem::path& path);

}  // namespace hintqa::testworld
