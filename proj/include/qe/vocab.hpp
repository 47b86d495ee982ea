#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "qe/text.hpp"

namespace qe {

inline constexpr const char* kDefaultUnkSymbol = "<unk>";

/// How a count is compared against the threshold.
enum class ThresholdCmp { Greater, GreaterEqual };

struct VocabConfig {
  /// Default: words seen more than twice.
  std::uint64_t threshold = 2;
  ThresholdCmp cmp = ThresholdCmp::Greater;
  text::TokenizerPolicy policy;

  /// Smallest count that still makes a word a member.
  std::uint64_t min_count() const { return cmp == ThresholdCmp::Greater ? threshold + 1 : threshold; }
};

/// Word frequencies. Merging is associative and commutative, so shards can
/// be counted independently and combined in any order.
class WordCounts {
 public:
  void add(const std::string& word, std::uint64_t n = 1) { counts_[word] += n; }
  void merge(const WordCounts& other);

  /// Tokenizes the line and counts its words; returns false on invalid UTF-8.
  bool add_line(std::string_view line, const text::TokenizerPolicy& policy);

  const std::unordered_map<std::string, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const;

  bool operator==(const WordCounts&) const = default;

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::unordered_map<std::string, std::uint64_t> members, std::uint64_t min_count, std::string policy_tag);

  /// Keeps the words of `counts` that reach `min_count`.
  static Vocabulary from_counts(const WordCounts& counts, std::uint64_t min_count, std::string policy_tag);

  bool contains(const std::string& word) const { return entries_.contains(word); }
  std::uint64_t count(const std::string& word) const;
  std::size_t size() const { return entries_.size(); }
  std::uint64_t min_count() const { return min_count_; }
  const std::string& policy_tag() const { return policy_tag_; }
  const std::unordered_map<std::string, std::uint64_t>& entries() const { return entries_; }

  /// Members sorted by descending count, then bytewise.
  std::vector<std::pair<std::string, std::uint64_t>> sorted_entries() const;

 private:
  std::unordered_map<std::string, std::uint64_t> entries_;
  std::uint64_t min_count_ = 1;
  std::string policy_tag_;
};

/// Single sequential pass over the stream. Throws InvalidEncoding(line).
Vocabulary build_vocabulary(std::istream& corpus, const VocabConfig& config);

/// Counts the stream in batches of lines spread over `threads` workers.
/// The result equals the sequential count exactly.
WordCounts count_words_parallel(std::istream& corpus, const text::TokenizerPolicy& policy, unsigned threads,
                                std::size_t batch_lines = 8192);
WordCounts count_words(std::istream& corpus, const text::TokenizerPolicy& policy);

/// "word<TAB>count" lines in sorted_entries() order. A JSON sidecar
/// (<path>.meta.json) records the policy tag and membership threshold.
void write_vocabulary(const Vocabulary& vocab, std::ostream& out);
void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary read_vocabulary(std::istream& in, std::string policy_tag = {});
Vocabulary read_vocabulary(const std::filesystem::path& path);

struct ReplacementResult {
  std::vector<std::string> tokens;
  std::vector<bool> replaced_mask;
  std::string unk_symbol;
};

/// Replaces out-of-vocabulary words with `unk_symbol`. The unknown symbol
/// itself is always kept, so the operation is idempotent.
ReplacementResult replace_untranslated(const std::vector<std::string>& words, const Vocabulary& vocab,
                                       const std::string& unk_symbol = kDefaultUnkSymbol);

/// Tokenizes `line` with `policy`, replaces unknown words and joins with spaces.
/// Throws InvalidArgument when the policy does not match the vocabulary's tag.
std::string replace_untranslated_text(std::string_view line, const Vocabulary& vocab,
                                      const text::TokenizerPolicy& policy,
                                      const std::string& unk_symbol = kDefaultUnkSymbol);

}  // namespace qe
