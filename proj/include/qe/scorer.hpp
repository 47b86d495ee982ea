#pragma once

#include <cstdint>
#include <vector>

#include "qe/core_math.hpp"
#include "qe/data_io.hpp"
#include "qe/vocab.hpp"

namespace qe {

struct QEScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class ScoreKind { Precision, Recall, F1 };

struct ScorerConfig {
  /// Layer the embedding sets must come from. 8 suits the untuned encoder,
  /// 10 the alignment-tuned one.
  std::uint32_t layer = 8;
  ScoreKind score_kind = ScoreKind::Recall;
  bool exclude_special = true;
  /// Hypothesis embeddings were produced from unk-replaced text.
  bool apply_unk = false;
};

struct ScoreSeries {
  std::vector<double> values;
  std::vector<double> labels;  // empty, or parallel to values
};

/// Greedy-matching precision/recall/F1 between source rows `x` and
/// hypothesis rows `y`. Rows are L2-normalized first, so matches are cosines.
/// Precision averages, over hypothesis tokens, the best cosine against any
/// source token; recall does the same from the source side.
QEScore greedy_match_score(const EmbeddingMatrix& x, const EmbeddingMatrix& y);

/// Rows of a sentence embedding that take part in matching.
EmbeddingMatrix matching_rows(const SentenceEmbedding& sentence, bool exclude_special);

double select(const QEScore& score, ScoreKind kind);

/// Scores every record in order. When `config.apply_unk` is set, `vocab`
/// is required and each hypothesis embedding must cover exactly as many words
/// as the unk-replaced hypothesis text has.
ScoreSeries score_dataset(const std::vector<QERecord>& records, const EmbeddingSet& source,
                          const EmbeddingSet& hypothesis, const ScorerConfig& config,
                          const Vocabulary* vocab = nullptr, const text::TokenizerPolicy& policy = {},
                          const std::string& unk_symbol = kDefaultUnkSymbol, unsigned threads = 1);

}  // namespace qe
