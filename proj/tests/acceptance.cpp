// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "aer_oracle.hpp"
#include "gradcheck.hpp"
#include "qe/align_eval.hpp"
#include "qe/align_train.hpp"
#include "qe/core_math.hpp"
#include "qe/harness.hpp"
#include "qe/rng.hpp"
#include "qe/scorer.hpp"
#include "qe/ter.hpp"
#include "qe/text.hpp"
#include "qe/vocab.hpp"
#include "synthetic_world.hpp"
#include "ter_oracle.hpp"

using qe::Matrix;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------------------

double cosine(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    dot += a(i, k) * b(j, k);
    na += a(i, k) * a(i, k);
    nb += b(j, k) * b(j, k);
  }
  return dot / std::sqrt(na * nb);
}

/// Mean over rows of `from` of the best cosine against any row of `to`.
double best_match_mean(const Matrix& from, const Matrix& to) {
  double sum = 0.0;
  for (std::size_t i = 0; i < from.rows(); ++i) {
    double best = -2.0;
    for (std::size_t j = 0; j < to.rows(); ++j) best = std::max(best, cosine(from, i, to, j));
    sum += best;
  }
  return sum / static_cast<double>(from.rows());
}

Matrix random_rows(qe::Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = rng.normal();
  return m;
}

void greedy_matching() {
  const auto t0 = std::chrono::steady_clock::now();
  qe::Rng rng(101);
  double worst = 0.0, worst_f1 = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(6), d = 1 + rng.below(8);
    const Matrix x = random_rows(rng, n, d), y = random_rows(rng, m, d);
    const auto s = qe::greedy_match_score(x, y);
    const double p = best_match_mean(y, x), r = best_match_mean(x, y);
    const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    worst = std::max({worst, std::abs(s.precision - p), std::abs(s.recall - r)});
    // F1 of opposite-sign P and R with a small sum is ill-conditioned, so its error is relative.
    worst_f1 = std::max(worst_f1, std::abs(s.f1 - f) / std::max(1.0, std::abs(f)));
  }
  double identity_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix x = random_rows(rng, 1 + rng.below(6), 1 + rng.below(8));
    const auto s = qe::greedy_match_score(x, x);
    identity_err = std::max({identity_err, std::abs(s.precision - 1.0), std::abs(s.recall - 1.0),
                             std::abs(s.f1 - 1.0)});
  }
  const double secs = seconds_since(t0);
  report(worst <= 1e-12 && worst_f1 <= 1e-12 && identity_err <= 1e-12 && secs < 5.0, "greedy-matching",
         fmt("1000 random pairs P/R max |diff| %.3g (tol 1e-12), F1 max |diff|/max(1,|F1|) %.3g (tol 1e-12), "
             "identity max |1-x| %.3g (tol 1e-12), %.2fs (limit 5s)",
             worst, worst_f1, identity_err, secs));
}

// ---------------------------------------------------------------------------

void gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  qe::Rng rng(202);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = gradcheck::random_instance(rng);
    const auto analytic = qe::loss_gradient(inst.batch, inst.params, inst.config);
    const auto numeric = gradcheck::numeric_gradient(inst, 1e-5);
    worst = std::max(worst, gradcheck::relative_error(analytic, numeric));
  }
  const double secs = seconds_since(t0);
  report(worst < 1e-4 && secs < 30.0, "loss-gradient",
         fmt("200 instances max relative error %.3g (tol 1e-4), %.2fs (limit 30s)", worst, secs));
}

// ---------------------------------------------------------------------------

std::pair<Matrix, Matrix> rows_with_cosines(const std::vector<std::vector<double>>& cos) {
  const std::size_t b = cos.size();
  Matrix s(b, b + 1), t(b, b + 1);
  for (std::size_t j = 0; j < b; ++j) t(j, j) = 1.0;
  for (std::size_t i = 0; i < b; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      s(i, j) = cos[i][j];
      sq += cos[i][j] * cos[i][j];
    }
    s(i, b) = std::sqrt(1.0 - sq);
  }
  return {s, t};
}

qe::AlignedPairList diagonal(std::size_t b) {
  qe::AlignedPairList p;
  for (std::uint32_t k = 0; k < b; ++k) p.emplace_back(k, k);
  return p;
}

void loss_fixed_points() {
  qe::Rng rng(303);
  bool single_zero = true;
  for (int t = 0; t < 50; ++t) {
    const Matrix s = random_rows(rng, 1 + rng.below(5), 4), tg = random_rows(rng, 1 + rng.below(5), 4);
    const qe::AlignedPairList one{{static_cast<std::uint32_t>(rng.below(s.rows())),
                                   static_cast<std::uint32_t>(rng.below(tg.rows()))}};
    single_zero = single_zero && qe::alignment_loss(s, tg, one, {}) == 0.0;
  }
  double uniform_err = 0.0;
  for (std::size_t k : {2u, 3u, 5u}) {
    auto [s, t] = rows_with_cosines(std::vector<std::vector<double>>(k, std::vector<double>(k, 0.3)));
    uniform_err = std::max(uniform_err, std::abs(qe::alignment_loss(s, t, diagonal(k), {}) -
                                                 std::log(static_cast<double>(k))));
  }
  auto [s, t] = rows_with_cosines({{0.9, 0.1}, {0.2, 0.8}});
  const double worked = qe::alignment_loss(s, t, diagonal(2), {});
  const double worked_err = std::abs(worked - 0.0011585061045436769365);
  report(single_zero && uniform_err <= 1e-9 && worked_err <= 1e-7, "loss-fixed-points",
         fmt("single pair exactly 0: %s, uniform ln k max err %.3g (tol 1e-9), two-pair value %.10f err %.3g "
             "(tol 1e-7)",
             single_zero ? "yes" : "no", uniform_err, worked, worked_err));
}

// ---------------------------------------------------------------------------

std::vector<std::string> letters(const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(std::string(1, static_cast<char>('a' + id)));
  return out;
}

void ter_oracle() {
  using qe::text::split_whitespace;
  qe::Rng rng(404);
  std::size_t mismatches = 0, above_lev = 0, below_opt = 0;
  std::string example;
  for (int t = 0; t < 10000; ++t) {
    std::vector<int> h(rng.below(7)), r(1 + rng.below(6));
    for (auto& x : h) x = static_cast<int>(rng.below(4));
    for (auto& x : r) x = static_cast<int>(rng.below(4));
    const auto edits = qe::ter(letters(h), letters(r)).edits();
    const auto best = oracle::min_ter_edits(h, r);
    if (edits > oracle::edit_distance(h, r)) ++above_lev;
    if (edits < best) ++below_opt;
    if (edits != best) {
      if (mismatches++ == 0) {
        std::string hs, rs;
        for (auto s : letters(h)) hs += s;
        for (auto s : letters(r)) rs += s;
        example = fmt(", e.g. hyp=%s ref=%s greedy %zu vs optimum %zu", hs.c_str(), rs.c_str(), edits, best);
      }
    }
  }
  const double swap = qe::ter(split_whitespace("a c b d"), split_whitespace("a b c d")).ter;
  const double block =
      qe::ter(split_whitespace("on the mat the cat sat"), split_whitespace("the cat sat on the mat")).ter;
  const bool examples = swap == 0.25 && std::abs(block - 1.0 / 6.0) <= 1e-12;
  report(mismatches == 0 && above_lev == 0 && below_opt == 0 && examples, "ter-minimum-edits",
         fmt("%zu/10000 differ from exhaustive minimum (tol 0; %zu above Levenshtein, %zu below optimum)%s; "
             "worked examples %.4f and %.4f (expect 0.25, 0.1667)",
             mismatches, above_lev, below_opt, example.c_str(), swap, block));
}

// ---------------------------------------------------------------------------

void aer_enumeration() {
  std::size_t cases = 0;
  double worst = 0.0;
  for (unsigned s = 0; s < 512; ++s) {
    // Possible is a superset of sure: 3 labelings per cell.
    for (unsigned extra = 0; extra < 512; ++extra) {
      if (extra & s) continue;
      const unsigned p = s | extra;
      for (unsigned a = 0; a < 512; ++a) {
        if (a == 0 && s == 0) continue;  // 0/0
        const qe::AERInput input{oracle::cells(a), oracle::cells(s), oracle::cells(p)};
        worst = std::max(worst, std::abs(qe::aer(input) - oracle::aer(a, s, p)));
        ++cases;
      }
    }
  }
  bool perfect = true, empty = true;
  for (unsigned s = 1; s < 512; ++s) {
    const auto gold = oracle::cells(s);
    perfect = perfect && qe::aer({gold, gold, gold}) == 0.0;
    empty = empty && qe::aer({{}, gold, gold}) == 1.0;
  }
  report(worst <= 1e-15 && perfect && empty, "aer-enumeration",
         fmt("%zu labelings of a 3x3 grid max |diff| %.3g (tol 1e-15), perfect=0: %s, empty=1: %s", cases, worst,
             perfect ? "yes" : "no", empty ? "yes" : "no"));
}

// ---------------------------------------------------------------------------

void end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  synth::World world(synth::WorldConfig{});
  const auto base = world.pretrained_params();
  const auto corpus = world.training_pairs();
  qe::TrainConfig tc;
  tc.steps = 2000;
  tc.seed = 1;
  const auto trained = qe::train(corpus, base, tc, qe::LossConfig{});

  const std::size_t k = 50;
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    first += trained.history[i].alignment / k;
    last += trained.history[trained.history.size() - 1 - i].alignment / k;
  }
  report(last < 0.5 * first, "training-loss",
         fmt("alignment loss mean of first 50 steps %.4f, last 50 steps %.4f (need < half)", first, last));

  const auto& held = world.heldout();
  auto corpus_aer = [&](const qe::ToyEncoderParams& p) {
    std::vector<qe::PairSet> pred;
    std::vector<qe::WordAlignment> gold;
    for (std::size_t n = 0; n < held.size(); ++n) {
      const auto id = static_cast<std::uint32_t>(n);
      pred.push_back(qe::extract_sentence_alignment(world.embed(id, held[n].source, p),
                                                    world.embed(id, held[n].target, p)));
      gold.push_back({held[n].gold, held[n].gold});
    }
    return qe::corpus_aer(pred, gold);
  };
  const double aer0 = corpus_aer(base), aer1 = corpus_aer(trained.params);
  const double reduction = (aer0 - aer1) / aer0;
  report(reduction >= 0.30, "alignment-aer",
         fmt("held-out AER %.4f -> %.4f, relative reduction %.1f%% (need >= 30%%)", aer0, aer1, 100.0 * reduction));

  std::stringstream mono;
  for (const auto& line : world.monolingual_target()) mono << line << '\n';
  const auto vocab = qe::build_vocabulary(mono, qe::VocabConfig{});

  auto recall = [&](std::uint32_t id, const std::vector<std::string>& src, std::vector<std::string> hyp,
                    const qe::ToyEncoderParams& p, bool unk) {
    if (unk) hyp = qe::replace_untranslated(hyp, vocab).tokens;
    return qe::greedy_match_score(world.embed(id, src, p).vectors, world.embed(id, hyp, p).vectors).recall;
  };
  std::vector<double> quality;
  for (const auto& h : world.hypotheses()) quality.push_back(1.0 - h.noise_rate);
  auto correlation = [&](const qe::ToyEncoderParams& p, bool unk) {
    std::vector<double> v;
    for (std::size_t n = 0; n < held.size(); ++n)
      v.push_back(recall(static_cast<std::uint32_t>(n), held[n].source, world.hypotheses()[n].words, p, unk));
    return qe::pearson(v, quality);
  };
  const double r_base = correlation(base, false), r_aligned = correlation(trained.params, false);
  const double r_unk = correlation(base, true), r_both = correlation(trained.params, true);
  report(r_base < r_aligned && r_base < r_unk && r_both > r_aligned && r_both > r_unk, "quality-correlation",
         fmt("Pearson vs 1-noise: base %+.4f, aligned %+.4f, unk %+.4f, combined %+.4f "
             "(need base below both, combined above both)",
             r_base, r_aligned, r_unk, r_both));

  double copy_raw = 0.0, copy_unk = 0.0;
  for (std::size_t n = 0; n < held.size(); ++n) {
    const auto id = static_cast<std::uint32_t>(n);
    copy_raw += recall(id, held[n].source, held[n].source, base, false) / static_cast<double>(held.size());
    copy_unk += recall(id, held[n].source, held[n].source, base, true) / static_cast<double>(held.size());
  }
  const double secs = seconds_since(t0);
  report(copy_raw - copy_unk >= 0.2 && secs < 600.0, "copy-through-penalty",
         fmt("mean recall of copied source %.4f -> %.4f with unk replacement, drop %.4f (need >= 0.2); "
             "pipeline %.1fs (limit 600s)",
             copy_raw, copy_unk, copy_raw - copy_unk, secs));
}

// ---------------------------------------------------------------------------

void stability() {
  qe::Rng rng(505);
  std::vector<double> pred, gold;
  for (int n = 0; n < 1000; ++n) {
    const double x = rng.normal();
    gold.push_back(x);
    pred.push_back(x + rng.normal());
  }
  const auto curve = qe::size_stability(pred, gold, {100, 850}, 50, 9);
  report(curve.std_r[1] < curve.std_r[0], "subset-stability",
         fmt("std of Pearson over 50 subsets: size 100 %.4f, size 850 %.4f (need 850 below 100)", curve.std_r[0],
             curve.std_r[1]));
}

// ---------------------------------------------------------------------------

void vocabulary() {
  const auto t0 = std::chrono::steady_clock::now();
  qe::Rng rng(606);
  std::string text;
  text.reserve(80'000'000);
  std::size_t tokens = 0;
  while (tokens < 10'000'000) {
    const std::size_t len = 1 + rng.below(20);
    for (std::size_t k = 0; k < len; ++k) {
      // Roughly Zipfian ranks so counts span many thresholds.
      const auto rank = static_cast<std::uint64_t>(std::exp(rng.uniform() * std::log(50000.0)));
      text += (k ? " w" : "w") + std::to_string(rank);
    }
    text += '\n';
    tokens += len;
  }
  const qe::text::TokenizerPolicy policy;
  std::istringstream seq_in(text), par_in(text);
  const auto sequential = qe::count_words(seq_in, policy);
  const auto parallel = qe::count_words_parallel(par_in, policy, 4);
  const bool equal = sequential == parallel && sequential.total() == tokens;

  bool monotone = true;
  std::size_t previous = SIZE_MAX;
  for (std::uint64_t min_count = 1; min_count <= 64; ++min_count) {
    const auto lower = qe::Vocabulary::from_counts(sequential, min_count, policy.tag());
    const auto higher = qe::Vocabulary::from_counts(sequential, min_count + 1, policy.tag());
    for (const auto& [word, count] : higher.entries()) monotone = monotone && lower.contains(word);
    monotone = monotone && lower.size() <= previous;
    previous = lower.size();
  }
  report(equal && monotone, "vocabulary-determinism",
         fmt("%zu tokens, %zu types: 4-thread counts equal sequential: %s, membership nested for min counts 1..65: "
             "%s, %.1fs",
             tokens, sequential.counts().size(), equal ? "yes" : "no", monotone ? "yes" : "no", seconds_since(t0)));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{greedy_matching, gradient_check, loss_fixed_points,
                                                    ter_oracle,      aer_enumeration, end_to_end,
                                                    stability,       vocabulary};
  for (const auto& run : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(false, "exception", e.what());
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
