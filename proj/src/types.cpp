#include "hintqa/types.hpp"

namespace hintqa {

std::string_view to_string(Method m) {
  return m == Method::Convergence ? "convergence" : "cosine";
}

std::string_view to_string(Group g) { return g == Group::High ? "high" : "low"; }

std::string_view to_string(Ordering o) {
  switch (o) {
    case Ordering::Ascending: return "asc";
    case Ordering::Descending: return "desc";
    case Ordering::Canonical: break;
  }
  return "canonical";
}

std::optional<Method> parse_method(std::string_view s) {
  if (s == "convergence") return Method::Convergence;
  if (s == "cosine") return Method::CosineSimilarity;
  return std::nullopt;
}

std::optional<Group> parse_group(std::string_view s) {
  if (s == "high") return Group::High;
  if (s == "low") return Group::Low;
  return std::nullopt;
}

std::optional<Ordering> parse_ordering(std::string_view s) {
  if (s == "canonical") return Ordering::Canonical;
  if (s == "asc" || s == "ascending") return Ordering::Ascending;
  if (s == "desc" || s == "descending") return Ordering::Descending;
  return std::nullopt;
}

std::string_view display_name(Method m) {
  return m == Method::Convergence ? "Convergence" : "Cosine Similarity";
}

std::string_view display_name(Group g) { return g == Group::High ? "High-score" : "Low-score"; }

std::string_view display_name(Ordering o) {
  switch (o) {
    case Ordering::Ascending: return "Ascending";
    case Ordering::Descending: return "Descending";
    case Ordering::Canonical: break;
  }
  return "Canonical";
}

}  // namespace hintqa
