#include "qe/ter.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <unordered_map>

#include "qe/error.hpp"
#include "qe/text.hpp"

namespace qe {

namespace {

constexpr std::size_t kAbandoned = std::numeric_limits<std::size_t>::max();

// Edit distance, or kAbandoned as soon as every cell of a DP row exceeds
// `bound` (the final distance can then no longer be <= bound).
std::size_t bounded_levenshtein(const std::vector<int>& hyp, const std::vector<int>& ref, std::size_t bound) {
  const std::size_t m = ref.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    std::size_t row_min = cur[0];
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({diag, prev[j] + 1, cur[j - 1] + 1});
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > bound) return kAbandoned;
    std::swap(prev, cur);
  }
  return prev[m] <= bound ? prev[m] : kAbandoned;
}

struct EditCounts {
  std::size_t insertions = 0, deletions = 0, substitutions = 0;
};

// Full table plus backtrace. On ties the path prefers match/substitution,
// then deletion, then insertion.
EditCounts edit_counts(const std::vector<int>& hyp, const std::vector<int>& ref) {
  const std::size_t n = hyp.size(), m = ref.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts c;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) ++c.substitutions;
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

bool occurs_in(const std::vector<int>& ref, const std::vector<int>& seq, std::size_t start, std::size_t len) {
  if (len > ref.size()) return false;
  for (std::size_t j = 0; j + len <= ref.size(); ++j) {
    if (std::equal(seq.begin() + start, seq.begin() + start + len, ref.begin() + j)) return true;
  }
  return false;
}

// `seq` with [start, start+len) removed and reinserted so that it begins at
// index `dest` of the result.
void apply_shift(const std::vector<int>& seq, std::size_t start, std::size_t len, std::size_t dest,
                 std::vector<int>& out) {
  out.clear();
  std::vector<int> rest;
  rest.reserve(seq.size() - len);
  rest.insert(rest.end(), seq.begin(), seq.begin() + start);
  rest.insert(rest.end(), seq.begin() + start + len, seq.end());
  out.insert(out.end(), rest.begin(), rest.begin() + dest);
  out.insert(out.end(), seq.begin() + start, seq.begin() + start + len);
  out.insert(out.end(), rest.begin() + dest, rest.end());
}

}  // namespace

std::size_t levenshtein(const std::vector<int>& hyp, const std::vector<int>& ref) {
  return bounded_levenshtein(hyp, ref, std::numeric_limits<std::size_t>::max() - 1);
}

TERResult ter(const std::vector<std::string>& hyp, const std::vector<std::string>& ref, const TERConfig& config) {
  if (ref.empty()) throw Error(ErrorKind::EmptyReference, "reference has no words");

  std::unordered_map<std::string, int> ids;
  auto intern = [&](const std::string& w) {
    const std::string key = config.case_sensitive ? w : text::to_lower(w);
    return ids.try_emplace(key, static_cast<int>(ids.size())).first->second;
  };
  std::vector<int> r, h;
  for (const auto& w : ref) r.push_back(intern(w));
  for (const auto& w : hyp) h.push_back(intern(w));

  TERResult result;
  result.ref_length = ref.size();
  std::size_t dist = levenshtein(h, r);
  std::vector<int> candidate;

  while (dist >= 2) {
    struct Best {
      std::size_t dist, start, len, dest;
    };
    std::optional<Best> best;
    const std::size_t n = h.size();
    for (std::size_t start = 0; start < n; ++start) {
      for (std::size_t len = 1; len <= config.max_shift_length && start + len <= n; ++len) {
        if (!occurs_in(r, h, start, len)) break;  // longer spans contain this one
        const std::size_t lo = start > config.max_shift_distance ? start - config.max_shift_distance : 0;
        const std::size_t hi = std::min(n - len, start + config.max_shift_distance);
        for (std::size_t dest = lo; dest <= hi; ++dest) {
          if (dest == start) continue;
          // A shift must save at least two edits; a tie with the current best
          // is only taken by a longer span.
          std::size_t bound = dist - 2;
          if (best) bound = std::min(bound, len > best->len ? best->dist : best->dist - 1);
          if (best && best->dist == 0 && len <= best->len) continue;
          apply_shift(h, start, len, dest, candidate);
          const std::size_t d = bounded_levenshtein(candidate, r, bound);
          if (d == kAbandoned) continue;
          best = Best{d, start, len, dest};
        }
      }
    }
    if (!best) break;
    apply_shift(h, best->start, best->len, best->dest, candidate);
    h.swap(candidate);
    dist = best->dist;
    ++result.shifts;
  }

  const EditCounts counts = edit_counts(h, r);
  result.insertions = counts.insertions;
  result.deletions = counts.deletions;
  result.substitutions = counts.substitutions;
  result.ter = static_cast<double>(result.edits()) / static_cast<double>(result.ref_length);
  return result;
}

double hter_label(const std::vector<std::string>& mt, const std::vector<std::string>& post_edit,
                  const TERConfig& config) {
  return ter(mt, post_edit, config).ter;
}

}  // namespace qe
