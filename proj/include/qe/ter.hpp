#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace qe {

struct TERConfig {
  bool case_sensitive = false;
  std::size_t max_shift_distance = 50;
  std::size_t max_shift_length = 10;
};

struct TERResult {
  std::size_t insertions = 0;     // reference words missing from the hypothesis
  std::size_t deletions = 0;      // hypothesis words with no reference counterpart
  std::size_t substitutions = 0;
  std::size_t shifts = 0;
  std::size_t ref_length = 0;
  double ter = 0.0;

  std::size_t edits() const { return insertions + deletions + substitutions + shifts; }
};

/// Word-level edit distance with unit insert/delete/substitute costs.
std::size_t levenshtein(const std::vector<int>& hyp, const std::vector<int>& ref);

/// Translation edit rate with block shifts.
///
/// Shifts are found greedily: each round tries every hypothesis span that
/// also occurs in the reference (up to max_shift_length words) at every
/// position within max_shift_distance, and applies the move that lowers the
/// edit distance the most. Ties prefer the longer span, then the earlier
/// span start, then the earlier destination. A shift costs one edit, so it
/// is applied only when it removes at least two edits. Tokenization is the
/// caller's job.
TERResult ter(const std::vector<std::string>& hyp, const std::vector<std::string>& ref, const TERConfig& config = {});

/// HTER of a machine translation against its post-edit; not clamped to 1.
double hter_label(const std::vector<std::string>& mt, const std::vector<std::string>& post_edit,
                  const TERConfig& config = {});

}  // namespace qe
