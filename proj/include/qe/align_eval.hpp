#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qe/core_math.hpp"
#include "qe/data_io.hpp"

namespace qe {

enum class ExtractionPolicy {
  /// (i, j) kept when j is the best column of row i and i the best row of
  /// column j.
  MutualArgmax,
  /// Repeatedly take the largest entry among unclaimed rows and columns.
  IterativeGreedy,
};

/// Word-level similarity: max over the subword block of each word pair.
/// Special tokens (kSpecialWordIndex) are ignored.
SimilarityMatrix pool_to_words(const SimilarityMatrix& subword_sim, std::span<const std::uint32_t> source_word_map,
                               std::span<const std::uint32_t> target_word_map);

/// One-to-one alignment from a similarity table. Ties go to the smaller index.
PairSet extract_alignment(const SimilarityMatrix& sim, ExtractionPolicy policy = ExtractionPolicy::MutualArgmax);

/// Word alignment of one sentence pair from its subword embeddings.
PairSet extract_sentence_alignment(const SentenceEmbedding& source, const SentenceEmbedding& target,
                                   ExtractionPolicy policy = ExtractionPolicy::MutualArgmax);

struct AERInput {
  PairSet predicted;
  PairSet sure;
  PairSet possible;  // must contain `sure`
};

/// 1 - (|A & S| + |A & P|) / (|A| + |S|).
double aer(const AERInput& input);

/// Intersection counts behind an AER value; summing them over sentences
/// gives the corpus-level (micro-averaged) rate.
struct AERCounts {
  std::size_t predicted = 0;
  std::size_t sure = 0;
  std::size_t predicted_sure = 0;
  std::size_t predicted_possible = 0;

  AERCounts& operator+=(const AERCounts& o);
  double rate() const;
};

AERCounts aer_counts(const AERInput& input);

/// Corpus AER of predicted alignments against gold, sentence by sentence.
double corpus_aer(const std::vector<PairSet>& predicted, const std::vector<WordAlignment>& gold);

struct LayerAER {
  std::uint32_t layer = 0;
  double aer = 0.0;
};

/// Corpus AER per layer. `source_layers[k]` / `target_layers[k]` hold the
/// embedding sets of one layer each; sentences are matched by position and
/// must carry the same ids on both sides.
std::vector<LayerAER> layer_sweep(const std::vector<EmbeddingSet>& source_layers,
                                  const std::vector<EmbeddingSet>& target_layers,
                                  const std::vector<WordAlignment>& gold, const std::vector<std::uint32_t>& layers,
                                  ExtractionPolicy policy = ExtractionPolicy::MutualArgmax);

}  // namespace qe
