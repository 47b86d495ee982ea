#include <gtest/gtest.h>

#include <algorithm>

#include "qe/rng.hpp"
#include "qe/scorer.hpp"
#include "test_util.hpp"

using qe::Matrix;
using testutil::kind_of;

namespace {

Matrix random_matrix(qe::Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

qe::SentenceEmbedding sentence(std::uint32_t id, Matrix vectors, bool with_specials) {
  qe::SentenceEmbedding s;
  s.id = id;
  for (std::size_t t = 0; t < vectors.rows(); ++t) {
    const bool special = with_specials && (t == 0 || t + 1 == vectors.rows());
    s.tokens.push_back(special ? "<s>" : "w" + std::to_string(t));
    s.word_index.push_back(special ? qe::kSpecialWordIndex : static_cast<std::uint32_t>(t - (with_specials ? 1 : 0)));
  }
  s.vectors = std::move(vectors);
  return s;
}

qe::EmbeddingSet make_set(std::vector<qe::SentenceEmbedding> sentences, std::uint32_t layer = 8) {
  qe::EmbeddingSet set;
  set.manifest.layer = layer;
  set.manifest.dim = static_cast<std::uint32_t>(sentences.front().vectors.cols());
  set.sentences = std::move(sentences);
  return set;
}

}  // namespace

TEST(GreedyMatch, IdentityIsOne) {
  qe::Rng rng(1);
  auto x = random_matrix(rng, 5, 4);
  auto s = qe::greedy_match_score(x, x);
  EXPECT_NEAR(s.precision, 1.0, 1e-15);
  EXPECT_NEAR(s.recall, 1.0, 1e-15);
  EXPECT_NEAR(s.f1, 1.0, 1e-15);
}

TEST(GreedyMatch, WorkedTable) {
  auto s = qe::greedy_match_score(Matrix::from_rows({{1, 0}, {0, 1}}), Matrix::from_rows({{1, 0}, {0.6, 0.8}}));
  EXPECT_NEAR(s.recall, 0.9, 1e-15);
  EXPECT_NEAR(s.precision, 0.9, 1e-15);
  EXPECT_NEAR(s.f1, 0.9, 1e-15);
}

TEST(GreedyMatch, SingleSourceToken) {
  auto x = Matrix::from_rows({{1, 0}});
  auto y = Matrix::from_rows({{0.6, 0.8}, {0, 1}, {-1, 0}});
  auto s = qe::greedy_match_score(x, y);
  EXPECT_NEAR(s.recall, 0.6, 1e-15);
  EXPECT_NEAR(s.precision, (0.6 + 0.0 - 1.0) / 3.0, 1e-15);
}

TEST(GreedyMatch, UnnormalizedInputsMatchNormalized) {
  qe::Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    auto x = random_matrix(rng, 1 + rng.below(6), 3);
    auto y = random_matrix(rng, 1 + rng.below(6), 3);
    auto a = qe::greedy_match_score(x, y);
    auto b = qe::greedy_match_score(qe::l2_normalize_rows(x), qe::l2_normalize_rows(y));
    EXPECT_NEAR(a.recall, b.recall, 1e-14);
    EXPECT_NEAR(a.precision, b.precision, 1e-14);
  }
}

TEST(GreedyMatch, SwappingSidesSwapsPrecisionAndRecall) {
  qe::Rng rng(9);
  auto x = random_matrix(rng, 4, 3);
  auto y = random_matrix(rng, 6, 3);
  auto a = qe::greedy_match_score(x, y);
  auto b = qe::greedy_match_score(y, x);
  EXPECT_EQ(a.precision, b.recall);
  EXPECT_EQ(a.recall, b.precision);
}

TEST(GreedyMatch, EmptySentence) {
  EXPECT_EQ(kind_of([] { qe::greedy_match_score(Matrix(0, 3), Matrix(2, 3, 1.0)); }), qe::ErrorKind::EmptySentence);
}

TEST(ScoreDataset, IdentityRecordScoresOne) {
  qe::Rng rng(2);
  auto v = random_matrix(rng, 6, 4);
  auto src = make_set({sentence(0, v, true)});
  auto series = qe::score_dataset({{0, "a b c d", "a b c d", std::nullopt, std::nullopt}}, src, src, {});
  ASSERT_EQ(series.values.size(), 1u);
  EXPECT_NEAR(series.values[0], 1.0, 1e-15);
  EXPECT_TRUE(series.labels.empty());
}

TEST(ScoreDataset, DeterministicAcrossRunsAndThreads) {
  qe::Rng rng(3);
  std::vector<qe::SentenceEmbedding> s, h;
  std::vector<qe::QERecord> records;
  for (std::uint32_t id = 0; id < 40; ++id) {
    s.push_back(sentence(id, random_matrix(rng, 3 + rng.below(5), 8), true));
    h.push_back(sentence(id, random_matrix(rng, 3 + rng.below(5), 8), true));
    records.push_back({id, "", "", std::nullopt, static_cast<double>(id)});
  }
  std::reverse(h.begin(), h.end());
  auto src = make_set(s), hyp = make_set(h);
  auto once = qe::score_dataset(records, src, hyp, {});
  EXPECT_EQ(once.labels.size(), records.size());
  EXPECT_EQ(qe::score_dataset(records, src, hyp, {}).values, once.values);
  EXPECT_EQ(qe::score_dataset(records, src, hyp, {}, nullptr, {}, qe::kDefaultUnkSymbol, 4).values, once.values);
}

TEST(ScoreDataset, SpecialTokensExcludedByDefault) {
  auto src = make_set({sentence(0, Matrix::from_rows({{0, 0, 1}, {1, 0, 0}, {0, 0, 1}}), true)});
  auto hyp = make_set({sentence(0, Matrix::from_rows({{0, 0, 1}, {0, 1, 0}, {0, 0, 1}}), true)});
  std::vector<qe::QERecord> rec{{0, "x", "y", std::nullopt, std::nullopt}};
  EXPECT_NEAR(qe::score_dataset(rec, src, hyp, {}).values[0], 0.0, 1e-15);
  qe::ScorerConfig keep;
  keep.exclude_special = false;
  EXPECT_NEAR(qe::score_dataset(rec, src, hyp, keep).values[0], 2.0 / 3.0, 1e-15);
}

TEST(ScoreDataset, Errors) {
  qe::Rng rng(4);
  auto src = make_set({sentence(0, random_matrix(rng, 3, 2), false)});
  std::vector<qe::QERecord> rec{{0, "a b c", "a b c", std::nullopt, std::nullopt}};
  qe::ScorerConfig cfg;
  cfg.layer = 10;
  EXPECT_EQ(kind_of([&] { qe::score_dataset(rec, src, src, cfg); }), qe::ErrorKind::ConfigLayerAbsent);
  std::vector<qe::QERecord> missing{{1, "a", "b", std::nullopt, std::nullopt}};
  EXPECT_EQ(kind_of([&] { qe::score_dataset(missing, src, src, {}); }), qe::ErrorKind::MissingEmbedding);
}

TEST(ScoreDataset, UnkModeChecksWordCounts) {
  qe::Rng rng(5);
  auto src = make_set({sentence(0, random_matrix(rng, 3, 2), false)});
  std::unordered_map<std::string, std::uint64_t> members{{"a", 3}, {"b", 3}};
  qe::Vocabulary vocab(members, 3, qe::text::TokenizerPolicy{}.tag());
  qe::ScorerConfig cfg;
  cfg.apply_unk = true;
  std::vector<qe::QERecord> ok{{0, "x y z", "a zz b", std::nullopt, std::nullopt}};
  EXPECT_NO_THROW(qe::score_dataset(ok, src, src, cfg, &vocab));
  std::vector<qe::QERecord> bad{{0, "x y z", "a b", std::nullopt, std::nullopt}};
  EXPECT_EQ(kind_of([&] { qe::score_dataset(bad, src, src, cfg, &vocab); }), qe::ErrorKind::EmbeddingMismatch);
  EXPECT_EQ(kind_of([&] { qe::score_dataset(ok, src, src, cfg); }), qe::ErrorKind::InvalidArgument);
}
