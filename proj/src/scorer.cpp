#include "qe/scorer.hpp"

#include <algorithm>
#include <string>
#include <thread>

#include "qe/error.hpp"

namespace qe {

QEScore greedy_match_score(const EmbeddingMatrix& x, const EmbeddingMatrix& y) {
  if (x.rows() == 0) throw Error(ErrorKind::EmptySentence, "source");
  if (y.rows() == 0) throw Error(ErrorKind::EmptySentence, "hypothesis");
  const SimilarityMatrix sim = cosine_similarity_matrix(x, y);

  std::vector<double> best_for_source(sim.rows());
  for (std::size_t i = 0; i < sim.rows(); ++i) {
    const auto row = sim.row(i);
    best_for_source[i] = *std::max_element(row.begin(), row.end());
  }
  std::vector<double> best_for_hyp(sim.cols(), -2.0);
  for (std::size_t i = 0; i < sim.rows(); ++i) {
    for (std::size_t j = 0; j < sim.cols(); ++j) best_for_hyp[j] = std::max(best_for_hyp[j], sim(i, j));
  }

  QEScore s;
  s.precision = order_free_mean(best_for_hyp);
  s.recall = order_free_mean(best_for_source);
  const double sum = s.precision + s.recall;
  s.f1 = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

EmbeddingMatrix matching_rows(const SentenceEmbedding& sentence, bool exclude_special) {
  if (!exclude_special) return sentence.vectors;
  std::vector<double> values;
  std::size_t rows = 0;
  for (std::size_t t = 0; t < sentence.vectors.rows(); ++t) {
    if (sentence.is_special(t)) continue;
    const auto row = sentence.vectors.row(t);
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  return EmbeddingMatrix(rows, sentence.vectors.cols(), std::move(values));
}

double select(const QEScore& score, ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Precision: return score.precision;
    case ScoreKind::Recall: return score.recall;
    case ScoreKind::F1: return score.f1;
  }
  return score.recall;
}

ScoreSeries score_dataset(const std::vector<QERecord>& records, const EmbeddingSet& source,
                          const EmbeddingSet& hypothesis, const ScorerConfig& config, const Vocabulary* vocab,
                          const text::TokenizerPolicy& policy, const std::string& unk_symbol, unsigned threads) {
  for (const auto* set : {&source, &hypothesis}) {
    if (set->manifest.layer != config.layer) {
      throw Error(ErrorKind::ConfigLayerAbsent, "embeddings are from layer " + std::to_string(set->manifest.layer) +
                                                    ", config asks for " + std::to_string(config.layer));
    }
  }
  if (config.apply_unk && vocab == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "unk replacement requested without a vocabulary");
  }

  std::vector<std::pair<const SentenceEmbedding*, const SentenceEmbedding*>> work(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto id = records[k].id;
    work[k] = {source.find(id), hypothesis.find(id)};
    if (!work[k].first) throw Error(ErrorKind::MissingEmbedding, "source side, id " + std::to_string(id));
    if (!work[k].second) throw Error(ErrorKind::MissingEmbedding, "hypothesis side, id " + std::to_string(id));
    if (config.apply_unk) {
      const auto replaced = replace_untranslated_text(records[k].hypothesis, *vocab, policy, unk_symbol);
      const auto words = text::split_whitespace(replaced).size();
      if (words != work[k].second->word_count()) {
        throw Error(ErrorKind::EmbeddingMismatch,
                    "id " + std::to_string(id) + ": hypothesis embeddings cover " +
                        std::to_string(work[k].second->word_count()) + " words, unk-replaced text has " +
                        std::to_string(words));
      }
    }
  }

  ScoreSeries series;
  series.values.assign(records.size(), 0.0);
  for (const auto& r : records) {
    if (r.gold_score) series.labels.push_back(*r.gold_score);
  }
  if (series.labels.size() != records.size()) series.labels.clear();

  // Each worker writes only its own slots, so output order never depends on scheduling.
  threads = std::clamp<unsigned>(threads, 1, std::max<std::size_t>(1, records.size()));
  std::vector<std::exception_ptr> failures(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < work.size(); k += threads) {
            const auto x = matching_rows(*work[k].first, config.exclude_special);
            const auto y = matching_rows(*work[k].second, config.exclude_special);
            series.values[k] = select(greedy_match_score(x, y), config.score_kind);
          }
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return series;
}

}  // namespace qe
