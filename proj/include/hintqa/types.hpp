#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hintqa {

/// Sentence-selection key used to rank hint subsets.
enum class Method { Convergence, CosineSimilarity };

enum class Group { High, Low };

/// Presentation order of the sentences inside a passage.
enum class Ordering { Canonical, Ascending, Descending };

std::string_view to_string(Method m);
std::string_view to_string(Group g);
std::string_view to_string(Ordering o);

std::optional<Method> parse_method(std::string_view s);
std::optional<Group> parse_group(std::string_view s);
/// Accepts "canonical", "asc"/"ascending", "desc"/"descending".
std::optional<Ordering> parse_ordering(std::string_view s);

/// Display label used in report tables ("Convergence", "Cosine Similarity", ...).
std::string_view display_name(Method m);
std::string_view display_name(Group g);
std::string_view display_name(Ordering o);

/// Identifies one passage: which question, how it was selected, and the
/// hint indices in presentation order.
struct PassageRef {
  Method method = Method::Convergence;
  Group group = Group::High;
  Ordering ordering = Ordering::Canonical;
  std::vector<std::size_t> hint_indices;

  friend bool operator==(const PassageRef&, const PassageRef&) = default;
};

}  // namespace hintqa
