#include <gtest/gtest.h>

#include <sstream>

#include "qe/data_io.hpp"
#include "qe/rng.hpp"
#include "test_util.hpp"

using testutil::kind_of;

namespace {

qe::EmbeddingSet random_set(qe::Rng& rng, std::size_t sentences, std::uint32_t dim) {
  qe::EmbeddingSet set;
  set.manifest.layer = 8;
  set.manifest.dim = dim;
  set.manifest.encoder = "toy";
  set.manifest.extra["note"] = "carried";
  for (std::size_t s = 0; s < sentences; ++s) {
    qe::SentenceEmbedding e;
    e.id = static_cast<std::uint32_t>(s * 3 + 1);
    const std::size_t n = 1 + rng.below(7);
    std::uint32_t word = 0;
    e.tokens.push_back("<s>");
    e.word_index.push_back(qe::kSpecialWordIndex);
    for (std::size_t t = 1; t < n + 1; ++t) {
      if (t > 1 && rng.below(2) == 0) ++word;
      e.tokens.push_back("▁tok" + std::to_string(t));
      e.word_index.push_back(word);
    }
    e.vectors = qe::Matrix(e.tokens.size(), dim);
    // Values representable in binary32 so the round trip is exact.
    for (auto& v : e.vectors.values()) v = static_cast<float>(rng.normal());
    set.sentences.push_back(std::move(e));
  }
  return set;
}

std::string serialize(const qe::EmbeddingSet& set) {
  std::ostringstream out(std::ios::binary);
  qe::write_embeddings(set, out);
  return out.str();
}

qe::EmbeddingSet deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return qe::read_embeddings(in);
}

}  // namespace

TEST(Dataset, ParsesAllColumns) {
  std::istringstream in(
      "id\tsource\thypothesis\tpost_edit\tgold_score\n"
      "0\tthe cat\tle chat\tle chat\t0.5\n"
      "1\ta dog\tun chien\tun chien\t-1.25\n"
      "2\tyes\toui\toui\t3\n");
  auto records = qe::parse_dataset(in);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[1].source, "a dog");
  EXPECT_EQ(records[1].hypothesis, "un chien");
  EXPECT_EQ(records[1].post_edit, "un chien");
  EXPECT_DOUBLE_EQ(*records[1].gold_score, -1.25);
  EXPECT_DOUBLE_EQ(*records[2].gold_score, 3.0);
}

TEST(Dataset, GoldColumnOptional) {
  std::istringstream in("id\tsource\thypothesis\n7\ta\tb\n");
  auto records = qe::parse_dataset(in);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].id, 7u);
  EXPECT_FALSE(records[0].gold_score.has_value());
  EXPECT_FALSE(records[0].post_edit.has_value());
}

TEST(Dataset, Errors) {
  EXPECT_EQ(kind_of([] {
              std::istringstream in("id\tsource\thypothesis\tgold_score\n0\tx\n");
              qe::parse_dataset(in);
            }),
            qe::ErrorKind::RaggedRow);
  EXPECT_EQ(kind_of([] {
              std::istringstream in("id\tsource\n0\tx\n");
              qe::parse_dataset(in);
            }),
            qe::ErrorKind::MissingColumn);
  EXPECT_EQ(kind_of([] {
              std::istringstream in("id\tsource\thypothesis\tgold_score\n0\tx\ty\tgood\n");
              qe::parse_dataset(in);
            }),
            qe::ErrorKind::NonNumericScore);
}

TEST(Dataset, WmtColumnNames) {
  std::istringstream in("index\toriginal\ttranslation\tscores\tz_mean\n4\tsrc\thyp\t[1]\t0.25\n");
  auto records = qe::parse_dataset(in, qe::DatasetFormat::wmt());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].id, 4u);
  EXPECT_DOUBLE_EQ(*records[0].gold_score, 0.25);
}

TEST(Dataset, WriteThenRead) {
  std::vector<qe::QERecord> records{{0, "a b", "c d", std::nullopt, 0.125}, {5, "e", "f", "g", std::nullopt}};
  std::stringstream buf;
  qe::write_dataset(buf, records);
  auto back = qe::parse_dataset(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].hypothesis, "c d");
  EXPECT_DOUBLE_EQ(*back[0].gold_score, 0.125);
  EXPECT_EQ(back[1].post_edit, "g");
  EXPECT_FALSE(back[1].gold_score.has_value());
}

TEST(Embeddings, RoundTrip) {
  qe::Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    auto set = random_set(rng, 1 + rng.below(5), static_cast<std::uint32_t>(1 + rng.below(8)));
    set.validate();
    EXPECT_EQ(deserialize(serialize(set)), set);
  }
}

TEST(Embeddings, BadMagic) {
  qe::Rng rng(1);
  auto bytes = serialize(random_set(rng, 2, 3));
  bytes[0] = 'X';
  EXPECT_EQ(kind_of([&] { deserialize(bytes); }), qe::ErrorKind::BadMagic);
}

TEST(Embeddings, MissingRowIsTruncation) {
  qe::Rng rng(2);
  auto set = random_set(rng, 1, 4);
  while (set.sentences[0].tokens.size() != 5) set = random_set(rng, 1, 4);
  auto bytes = serialize(set);
  bytes.resize(bytes.size() - 4 * 4);  // drop the last row of values
  EXPECT_EQ(kind_of([&] { deserialize(bytes); }), qe::ErrorKind::TruncatedFile);
}

TEST(Embeddings, ValidateRejectsBadWordMap) {
  qe::Rng rng(3);
  auto set = random_set(rng, 1, 2);
  set.sentences[0].word_index.back() += 2;
  EXPECT_THROW(set.validate(), qe::Error);
  set = random_set(rng, 1, 2);
  set.manifest.dim = 3;
  EXPECT_EQ(kind_of([&] { set.validate(); }), qe::ErrorKind::DimMismatch);
}

TEST(Embeddings, WordCountIgnoresSpecials) {
  qe::SentenceEmbedding e;
  e.tokens = {"<s>", "a", "b", "c", "</s>"};
  e.word_index = {qe::kSpecialWordIndex, 0, 0, 1, qe::kSpecialWordIndex};
  EXPECT_EQ(e.word_count(), 2u);
}

TEST(Embeddings, LayerPathTemplate) {
  EXPECT_EQ(qe::layer_path("emb/src.l{layer}.qeemb", 10), std::filesystem::path("emb/src.l10.qeemb"));
  EXPECT_EQ(qe::layer_path("plain.qeemb", 3), std::filesystem::path("plain.qeemb"));
}

TEST(Pharaoh, SureAndPossible) {
  auto a = qe::parse_pharaoh("0-0 1-2");
  EXPECT_EQ(a.sure, (qe::PairSet{{0, 0}, {1, 2}}));
  auto b = qe::parse_pharaoh("0-0 1?2");
  EXPECT_EQ(b.sure, (qe::PairSet{{0, 0}}));
  EXPECT_EQ(b.possible, (qe::PairSet{{0, 0}, {1, 2}}));
  EXPECT_EQ(qe::parse_pharaoh("0-0 1?2", true).sure, (qe::PairSet{{0, 0}, {1, 2}}));
  EXPECT_TRUE(qe::parse_pharaoh("").sure.empty());
}

TEST(Pharaoh, Malformed) {
  for (const char* bad : {"0-x", "1", "-1-2", "3-", "a?b"}) {
    EXPECT_EQ(kind_of([&] { qe::parse_pharaoh(bad); }), qe::ErrorKind::BadPair) << bad;
  }
}

TEST(Pharaoh, FormatRoundTrip) {
  qe::PairSet pairs{{2, 1}, {0, 0}, {10, 3}};
  EXPECT_EQ(qe::format_pharaoh(pairs), "0-0 2-1 10-3");
  EXPECT_EQ(qe::parse_pharaoh(qe::format_pharaoh(pairs)).sure, pairs);
}

TEST(Intersect, Cases) {
  auto a = qe::parse_pharaoh("0-0 1-1");
  auto b = qe::parse_pharaoh("1-1 2-2");
  EXPECT_EQ(qe::intersect_alignments(a, a), a);
  EXPECT_TRUE(qe::intersect_alignments(a, qe::parse_pharaoh("5-5")).sure.empty());
  EXPECT_EQ(qe::intersect_alignments(a, b).sure, (qe::PairSet{{1, 1}}));
}

TEST(Intersect, SwapDirection) {
  auto backward = qe::parse_pharaoh("1-0 2-1");
  EXPECT_EQ(qe::swap_direction(backward).sure, (qe::PairSet{{0, 1}, {1, 2}}));
  EXPECT_EQ(qe::swap_direction(qe::swap_direction(backward)), backward);
}
