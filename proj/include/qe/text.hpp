#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qe::text {

/// Decodes UTF-8 into code points. Returns nullopt on malformed input
/// (overlong forms, surrogates, truncated sequences, values > U+10FFFF).
std::optional<std::u32string> decode_utf8(std::string_view s);

std::string encode_utf8(std::u32string_view s);

bool is_space(char32_t c);
bool is_punct(char32_t c);

/// Simple one-to-one lowercase mapping for ASCII, Latin-1, Latin Extended-A,
/// Greek and Cyrillic. Other scripts are returned unchanged.
char32_t to_lower(char32_t c);

/// Lowercases valid UTF-8; invalid input is returned unchanged.
std::string to_lower(std::string_view s);

/// Word tokenization policy: whitespace split plus punctuation detachment,
/// an approximation of Moses-style tokenization.
///
/// Punctuation becomes a token of its own, except that an apostrophe, hyphen,
/// period or comma with letters/digits on both sides stays inside the word
/// ("don't", "well-known", "3.14", "1,000").
struct TokenizerPolicy {
  bool lowercase = false;

  /// Identifies the policy; stored alongside vocabularies.
  std::string tag() const;

  bool operator==(const TokenizerPolicy&) const = default;
};

/// Tokenizes one line. Returns nullopt if the line is not valid UTF-8.
std::optional<std::vector<std::string>> tokenize(std::string_view line, const TokenizerPolicy& policy);

/// Splits on ASCII whitespace only; no validation, no punctuation handling.
std::vector<std::string> split_whitespace(std::string_view line);

std::string join(const std::vector<std::string>& words, std::string_view sep = " ");

}  // namespace qe::text
