#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qe/core_math.hpp"

namespace qe {

// ---------------------------------------------------------------------------
// QE datasets (TSV with header)

struct QERecord {
  std::uint32_t id = 0;
  std::string source;
  std::string hypothesis;
  std::optional<std::string> post_edit;
  std::optional<double> gold_score;

  bool operator==(const QERecord&) const = default;
};

/// Maps the logical dataset fields onto header column names.
struct DatasetFormat {
  std::string id = "id";
  std::string source = "source";
  std::string hypothesis = "hypothesis";
  std::string post_edit = "post_edit";
  std::string gold_score = "gold_score";

  /// Column names of the WMT QE shared-task TSV releases
  /// (index / original / translation / z_mean).
  static DatasetFormat wmt();
};

std::vector<QERecord> parse_dataset(std::istream& in, const DatasetFormat& format = {});
std::vector<QERecord> read_dataset(const std::filesystem::path& path, const DatasetFormat& format = {});

/// Writes id/source/hypothesis plus post_edit and gold_score when any record has them.
void write_dataset(std::ostream& out, const std::vector<QERecord>& records);
void write_dataset(const std::filesystem::path& path, const std::vector<QERecord>& records);

// ---------------------------------------------------------------------------
// QEEMB1 embedding files
//
// Layout, all integers little-endian:
//   "QEEMB1" | u32 header length | header JSON (UTF-8)
//   per sentence: u32 id | u32 n | u32 dim | n x (u32 len, bytes) token texts
//                 | n x u32 word index | n*dim binary32 values, row-major

/// Word index of tokens that belong to no word (sentence boundary markers).
inline constexpr std::uint32_t kSpecialWordIndex = 0xFFFFFFFFu;

inline constexpr std::string_view kEmbeddingMagic = "QEEMB1";

struct EmbeddingManifest {
  std::uint32_t layer = 0;
  std::uint32_t dim = 0;
  std::string encoder;
  /// Any further header keys, carried through unchanged.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const EmbeddingManifest&) const = default;
};

struct SentenceEmbedding {
  std::uint32_t id = 0;
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> word_index;
  EmbeddingMatrix vectors;

  /// Number of words (highest non-special word index + 1).
  std::size_t word_count() const;
  bool is_special(std::size_t token) const { return word_index[token] == kSpecialWordIndex; }

  bool operator==(const SentenceEmbedding&) const = default;
};

struct EmbeddingSet {
  EmbeddingManifest manifest;
  std::vector<SentenceEmbedding> sentences;

  const SentenceEmbedding* find(std::uint32_t id) const;

  /// Throws unless every sentence matches the manifest dim and carries a
  /// well-formed subword-to-word map.
  void validate() const;

  bool operator==(const EmbeddingSet&) const = default;
};

void write_embeddings(const EmbeddingSet& set, std::ostream& out);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embeddings(std::istream& in);
EmbeddingSet read_embeddings(const std::filesystem::path& path);

/// Expands "{layer}" in a path template; paths without the placeholder are returned as is.
std::filesystem::path layer_path(const std::string& path_template, std::uint32_t layer);

// ---------------------------------------------------------------------------
// Pharaoh word alignments

using WordPair = std::pair<std::uint32_t, std::uint32_t>;
using PairSet = std::set<WordPair>;

/// Sure pairs are always also possible pairs.
struct WordAlignment {
  PairSet sure;
  PairSet possible;

  bool operator==(const WordAlignment&) const = default;
};

/// Parses "i-j" (sure) and "i?j" (possible) items, 0-based.
/// With all_sure, "i?j" items are treated as sure.
WordAlignment parse_pharaoh(std::string_view line, bool all_sure = false);

/// Formats pairs as sorted "i-j" items.
std::string format_pharaoh(const PairSet& pairs);

std::vector<WordAlignment> read_alignments(const std::filesystem::path& path, bool all_sure = false);

/// Keeps the pairs present in both directions. The backward alignment must
/// already be in source-to-target orientation (see swap_direction).
WordAlignment intersect_alignments(const WordAlignment& forward, const WordAlignment& backward);

WordAlignment swap_direction(const WordAlignment& alignment);

}  // namespace qe
