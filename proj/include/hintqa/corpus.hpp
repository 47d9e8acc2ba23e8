#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hintqa {

struct GoldAnswer {
  std::string text;
  std::vector<std::string> aliases;

  friend bool operator==(const GoldAnswer&, const GoldAnswer&) = default;
};

struct Question {
  std::string id;
  std::string text;
  GoldAnswer answer;
  /// Hint index i addresses hints[i] everywhere downstream.
  std::vector<std::string> hints;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Immutable once loaded; safe to share across readers.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DuplicateId if two questions share an id.
  Corpus(std::vector<Question> questions, std::string source_path = {});

  const std::vector<Question>& questions() const noexcept { return questions_; }
  const std::string& source_path() const noexcept { return source_path_; }
  std::size_t size() const noexcept { return questions_.size(); }
  bool empty() const noexcept { return questions_.empty(); }

  /// nullptr when absent.
  const Question* find(std::string_view id) const;

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.questions_ == b.questions_; }

 private:
  std::vector<Question> questions_;
  std::string source_path_;
};

/// Parse the dataset JSONL format. Blank lines are skipped.
/// Throws MalformedRecord(line_no, reason) or DuplicateId.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in, std::string source_path = {});

/// One JSON object per line, fields in the documented order.
void write_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct FilterResult {
  Corpus corpus;
  std::size_t dropped = 0;
};

/// Keep questions with at least `min_hints` hints, order preserved.
FilterResult filter_by_min_hints(const Corpus& corpus, std::size_t min_hints);

}  // namespace hintqa
