#include "qe/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "qe/error.hpp"

namespace qe {

void WordCounts::merge(const WordCounts& other) {
  for (const auto& [word, n] : other.counts_) counts_[word] += n;
}

bool WordCounts::add_line(std::string_view line, const text::TokenizerPolicy& policy) {
  auto words = text::tokenize(line, policy);
  if (!words) return false;
  for (auto& w : *words) ++counts_[std::move(w)];
  return true;
}

std::uint64_t WordCounts::total() const {
  std::uint64_t sum = 0;
  for (const auto& [word, n] : counts_) sum += n;
  return sum;
}

Vocabulary::Vocabulary(std::unordered_map<std::string, std::uint64_t> members, std::uint64_t min_count,
                       std::string policy_tag)
    : entries_(std::move(members)), min_count_(min_count), policy_tag_(std::move(policy_tag)) {
  if (min_count_ < 1) throw Error(ErrorKind::InvalidArgument, "vocabulary threshold must be >= 1");
  for (const auto& [word, n] : entries_) {
    if (n < min_count_) {
      throw Error(ErrorKind::InvalidArgument, "word '" + word + "' has count " + std::to_string(n) +
                                                  " below the membership threshold " + std::to_string(min_count_));
    }
  }
}

Vocabulary Vocabulary::from_counts(const WordCounts& counts, std::uint64_t min_count, std::string policy_tag) {
  std::unordered_map<std::string, std::uint64_t> members;
  for (const auto& [word, n] : counts.counts()) {
    if (n >= min_count) members.emplace(word, n);
  }
  return Vocabulary(std::move(members), min_count, std::move(policy_tag));
}

std::uint64_t Vocabulary::count(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? 0 : it->second;
}

std::vector<std::pair<std::string, std::uint64_t>> Vocabulary::sorted_entries() const {
  std::vector<std::pair<std::string, std::uint64_t>> out(entries_.begin(), entries_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

WordCounts count_words(std::istream& corpus, const text::TokenizerPolicy& policy) {
  WordCounts counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(corpus, line)) {
    ++line_no;
    if (!counts.add_line(line, policy)) throw Error(ErrorKind::InvalidEncoding, "line " + std::to_string(line_no));
  }
  return counts;
}

Vocabulary build_vocabulary(std::istream& corpus, const VocabConfig& config) {
  if (config.threshold < 1) throw Error(ErrorKind::InvalidArgument, "threshold must be >= 1");
  return Vocabulary::from_counts(count_words(corpus, config.policy), config.min_count(), config.policy.tag());
}

WordCounts count_words_parallel(std::istream& corpus, const text::TokenizerPolicy& policy, unsigned threads,
                                std::size_t batch_lines) {
  threads = std::max(1u, threads);
  batch_lines = std::max<std::size_t>(1, batch_lines);

  // Batches are read under the lock, counted outside it. Each worker keeps
  // its own table; addition commutes, so the merged totals are exact.
  std::mutex input_mutex;
  std::size_t lines_read = 0;
  std::size_t bad_line = 0;
  std::vector<WordCounts> partial(threads);

  auto worker = [&](unsigned slot) {
    std::vector<std::string> batch;
    while (true) {
      std::size_t first_line;
      batch.clear();
      {
        std::lock_guard lock(input_mutex);
        if (bad_line) return;
        first_line = lines_read + 1;
        std::string line;
        while (batch.size() < batch_lines && std::getline(corpus, line)) batch.push_back(std::move(line));
        lines_read += batch.size();
      }
      if (batch.empty()) return;
      for (std::size_t k = 0; k < batch.size(); ++k) {
        if (!partial[slot].add_line(batch[k], policy)) {
          std::lock_guard lock(input_mutex);
          const std::size_t where = first_line + k;
          if (!bad_line || where < bad_line) bad_line = where;
          return;
        }
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  }
  if (bad_line) throw Error(ErrorKind::InvalidEncoding, "line " + std::to_string(bad_line));

  WordCounts merged;
  for (const auto& p : partial) merged.merge(p);
  return merged;
}

void write_vocabulary(const Vocabulary& vocab, std::ostream& out) {
  for (const auto& [word, n] : vocab.sorted_entries()) out << word << '\t' << n << '\n';
}

void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    write_vocabulary(vocab, out);
  }
  std::ofstream meta(path.string() + ".meta.json", std::ios::trunc);
  if (!meta) throw Error(ErrorKind::Io, "cannot write vocabulary metadata for " + path.string());
  nlohmann::json j;
  j["policy"] = vocab.policy_tag();
  j["min_count"] = vocab.min_count();
  meta << j.dump(2) << '\n';
}

Vocabulary read_vocabulary(std::istream& in, std::string policy_tag) {
  std::unordered_map<std::string, std::uint64_t> entries;
  std::uint64_t min_count = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    std::uint64_t n = 0;
    if (tab == std::string::npos) {
      throw Error(ErrorKind::RaggedRow, "vocabulary line " + std::to_string(line_no));
    }
    const auto [ptr, ec] = std::from_chars(line.data() + tab + 1, line.data() + line.size(), n);
    if (ec != std::errc() || ptr != line.data() + line.size()) {
      throw Error(ErrorKind::NonNumericScore, "vocabulary line " + std::to_string(line_no));
    }
    entries[line.substr(0, tab)] = n;
    min_count = min_count == 0 ? n : std::min(min_count, n);
  }
  return Vocabulary(std::move(entries), std::max<std::uint64_t>(min_count, 1), std::move(policy_tag));
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string tag;
  std::uint64_t min_count = 0;
  std::ifstream meta(path.string() + ".meta.json");
  if (meta) {
    try {
      const auto j = nlohmann::json::parse(meta);
      tag = j.value("policy", std::string());
      min_count = j.value("min_count", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, "bad vocabulary metadata: " + std::string(e.what()));
    }
  }
  Vocabulary v = read_vocabulary(in, tag);
  if (min_count == 0) return v;
  auto entries = v.entries();
  return Vocabulary(std::move(entries), min_count, tag);
}

ReplacementResult replace_untranslated(const std::vector<std::string>& words, const Vocabulary& vocab,
                                       const std::string& unk_symbol) {
  ReplacementResult r;
  r.unk_symbol = unk_symbol;
  r.tokens.reserve(words.size());
  r.replaced_mask.reserve(words.size());
  for (const auto& w : words) {
    const bool keep = w == unk_symbol || vocab.contains(w);
    r.tokens.push_back(keep ? w : unk_symbol);
    r.replaced_mask.push_back(!keep);
  }
  return r;
}

std::string replace_untranslated_text(std::string_view line, const Vocabulary& vocab,
                                      const text::TokenizerPolicy& policy, const std::string& unk_symbol) {
  if (!vocab.policy_tag().empty() && vocab.policy_tag() != policy.tag()) {
    throw Error(ErrorKind::InvalidArgument,
                "vocabulary was built with policy " + vocab.policy_tag() + ", not " + policy.tag());
  }
  // Whitespace chunks that already are the unknown symbol are not split
  // further, which keeps the operation idempotent on its own output.
  std::vector<std::string> words;
  for (auto& chunk : text::split_whitespace(line)) {
    if (chunk == unk_symbol) {
      words.push_back(std::move(chunk));
      continue;
    }
    auto pieces = text::tokenize(chunk, policy);
    if (!pieces) throw Error(ErrorKind::InvalidEncoding, "hypothesis text");
    for (auto& p : *pieces) words.push_back(std::move(p));
  }
  return text::join(replace_untranslated(words, vocab, unk_symbol).tokens);
}

}  // namespace qe
