#include "qe/align_eval.hpp"

#include <algorithm>
#include <string>

#include "qe/error.hpp"
#include "qe/scorer.hpp"

namespace qe {

SimilarityMatrix pool_to_words(const SimilarityMatrix& subword_sim, std::span<const std::uint32_t> source_word_map,
                               std::span<const std::uint32_t> target_word_map) {
  if (source_word_map.size() != subword_sim.rows() || target_word_map.size() != subword_sim.cols()) {
    throw Error(ErrorKind::DimMismatch, "word maps do not match the similarity table");
  }
  auto words = [](std::span<const std::uint32_t> map) {
    std::size_t n = 0;
    for (auto w : map) {
      if (w != kSpecialWordIndex) n = std::max<std::size_t>(n, w + 1);
    }
    return n;
  };
  SimilarityMatrix out(words(source_word_map), words(target_word_map), -2.0);
  for (std::size_t a = 0; a < subword_sim.rows(); ++a) {
    const auto sw = source_word_map[a];
    if (sw == kSpecialWordIndex) continue;
    for (std::size_t b = 0; b < subword_sim.cols(); ++b) {
      const auto tw = target_word_map[b];
      if (tw == kSpecialWordIndex) continue;
      out(sw, tw) = std::max(out(sw, tw), subword_sim(a, b));
    }
  }
  return out;
}

PairSet extract_alignment(const SimilarityMatrix& sim, ExtractionPolicy policy) {
  if (sim.rows() == 0 || sim.cols() == 0) throw Error(ErrorKind::EmptyMatrix, "similarity table is empty");
  const std::size_t n = sim.rows(), m = sim.cols();
  PairSet out;
  if (policy == ExtractionPolicy::MutualArgmax) {
    std::vector<std::size_t> best_col(n, 0), best_row(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (sim(i, j) > sim(i, best_col[i])) best_col[i] = j;
        if (sim(i, j) > sim(best_row[j], j)) best_row[j] = i;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (best_row[best_col[i]] == i) out.emplace(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(best_col[i]));
    }
    return out;
  }

  // Entries in descending order; index order breaks ties.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cells.emplace_back(i, j);
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [&](const auto& a, const auto& b) { return sim(a.first, a.second) > sim(b.first, b.second); });
  std::vector<bool> row_used(n, false), col_used(m, false);
  for (const auto& [i, j] : cells) {
    if (row_used[i] || col_used[j]) continue;
    row_used[i] = col_used[j] = true;
    out.emplace(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  }
  return out;
}

PairSet extract_sentence_alignment(const SentenceEmbedding& source, const SentenceEmbedding& target,
                                   ExtractionPolicy policy) {
  const auto sim = cosine_similarity_matrix(source.vectors, target.vectors);
  return extract_alignment(pool_to_words(sim, source.word_index, target.word_index), policy);
}

AERCounts& AERCounts::operator+=(const AERCounts& o) {
  predicted += o.predicted;
  sure += o.sure;
  predicted_sure += o.predicted_sure;
  predicted_possible += o.predicted_possible;
  return *this;
}

double AERCounts::rate() const {
  if (predicted + sure == 0) throw Error(ErrorKind::EmptyBoth, "no predicted and no sure pairs");
  return 1.0 - static_cast<double>(predicted_sure + predicted_possible) / static_cast<double>(predicted + sure);
}

AERCounts aer_counts(const AERInput& input) {
  if (!std::includes(input.possible.begin(), input.possible.end(), input.sure.begin(), input.sure.end())) {
    throw Error(ErrorKind::InvalidArgument, "sure pairs must also be possible pairs");
  }
  AERCounts c;
  c.predicted = input.predicted.size();
  c.sure = input.sure.size();
  for (const auto& p : input.predicted) {
    if (input.sure.contains(p)) ++c.predicted_sure;
    if (input.possible.contains(p)) ++c.predicted_possible;
  }
  return c;
}

double aer(const AERInput& input) { return aer_counts(input).rate(); }

double corpus_aer(const std::vector<PairSet>& predicted, const std::vector<WordAlignment>& gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(predicted.size()) + " predicted vs " +
                                               std::to_string(gold.size()) + " gold alignments");
  }
  AERCounts total;
  for (std::size_t k = 0; k < predicted.size(); ++k) total += aer_counts({predicted[k], gold[k].sure, gold[k].possible});
  return total.rate();
}

std::vector<LayerAER> layer_sweep(const std::vector<EmbeddingSet>& source_layers,
                                  const std::vector<EmbeddingSet>& target_layers,
                                  const std::vector<WordAlignment>& gold, const std::vector<std::uint32_t>& layers,
                                  ExtractionPolicy policy) {
  auto find_layer = [](const std::vector<EmbeddingSet>& sets, std::uint32_t layer) -> const EmbeddingSet& {
    for (const auto& s : sets) {
      if (s.manifest.layer == layer) return s;
    }
    throw Error(ErrorKind::ConfigLayerAbsent, "layer " + std::to_string(layer));
  };
  std::vector<LayerAER> out;
  for (auto layer : layers) {
    const auto& src = find_layer(source_layers, layer);
    const auto& tgt = find_layer(target_layers, layer);
    if (src.sentences.size() != tgt.sentences.size() || src.sentences.size() != gold.size()) {
      throw Error(ErrorKind::LengthMismatch, "layer " + std::to_string(layer) + ": " +
                                                 std::to_string(src.sentences.size()) + " source, " +
                                                 std::to_string(tgt.sentences.size()) + " target sentences, " +
                                                 std::to_string(gold.size()) + " gold alignments");
    }
    std::vector<PairSet> predicted;
    predicted.reserve(gold.size());
    for (std::size_t k = 0; k < gold.size(); ++k) {
      if (src.sentences[k].id != tgt.sentences[k].id) {
        throw Error(ErrorKind::MissingEmbedding, "sentence " + std::to_string(k) + " has id " +
                                                     std::to_string(src.sentences[k].id) + " vs " +
                                                     std::to_string(tgt.sentences[k].id));
      }
      predicted.push_back(extract_sentence_alignment(src.sentences[k], tgt.sentences[k], policy));
    }
    out.push_back({layer, corpus_aer(predicted, gold)});
  }
  return out;
}

}  // namespace qe
