#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qe/core_math.hpp"
#include "qe/data_io.hpp"

namespace qe {

/// (source subword index, target subword index) pairs of one sentence pair.
using AlignedPairList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

/// Cross product of the subwords of every aligned word pair, deduplicated
/// and sorted. Word maps give the word index of each subword.
AlignedPairList expand_to_subwords(const PairSet& word_pairs, std::span<const std::uint32_t> source_word_map,
                                   std::span<const std::uint32_t> target_word_map);

/// Which tokens compete in the softmax denominators.
enum class NegativeSet {
  /// The other pairs of the sentence's own aligned-pair list.
  PairList,
  /// Every token on the other side of the sentence pair.
  SentenceTokens,
};

struct LossConfig {
  double temperature = 0.1;
  double lambda = 1.0;
  NegativeSet negatives = NegativeSet::PairList;
};

/// Symmetric InfoNCE over the aligned pairs of one sentence pair:
///
///   -1/(2B) * sum_i [ log softmax_j(cos(s_i, t_j) / T)[i] + log softmax_j(cos(s_j, t_i) / T)[i] ]
///
/// `source` and `target` hold the token rows of the two sentences; pair
/// indices point into them. Always >= 0, and exactly 0 when B = 1.
double alignment_loss(const EmbeddingMatrix& source, const EmbeddingMatrix& target, const AlignedPairList& pairs,
                      const LossConfig& config);

/// Trainable tensors of the toy encoder.
struct ToyEncoderWeights {
  Matrix embedding;  // vocab x dim
  Matrix mixing;     // dim x 2*dim

  std::size_t size() const { return embedding.values().size() + mixing.values().size(); }
  double& at(std::size_t k);
  double at(std::size_t k) const;

  bool operator==(const ToyEncoderWeights&) const = default;
};

/// Current weights plus the frozen copy taken at construction, which the
/// regularizer pulls back towards.
class ToyEncoderParams {
 public:
  ToyEncoderParams(Matrix embedding, Matrix mixing);
  ToyEncoderParams(ToyEncoderWeights current, ToyEncoderWeights pretrained);

  /// Gaussian embedding table (std `embedding_scale`) and a mixing matrix
  /// [I | context_weight * I] plus Gaussian noise of std `mixing_noise`.
  static ToyEncoderParams random(std::size_t vocab_size, std::size_t dim, std::uint64_t seed,
                                 double embedding_scale = 1.0, double context_weight = 0.5,
                                 double mixing_noise = 0.1);

  std::size_t vocab_size() const { return current_.embedding.rows(); }
  std::size_t dim() const { return current_.embedding.cols(); }

  ToyEncoderWeights& weights() { return current_; }
  const ToyEncoderWeights& weights() const { return current_; }
  const ToyEncoderWeights& pretrained() const { return pretrained_; }

 private:
  ToyEncoderWeights current_;
  ToyEncoderWeights pretrained_;
};

/// Row i = normalize(U * [E[ids[i]]; mean of E over the other tokens]).
EmbeddingMatrix toy_encode(std::span<const std::uint32_t> ids, const ToyEncoderParams& params);

/// Squared L2 distance between the current and the pretrained weights.
double regularization_loss(const ToyEncoderParams& params);

/// One parallel sentence pair prepared for training.
struct TrainingPair {
  std::vector<std::uint32_t> source_ids;
  std::vector<std::uint32_t> target_ids;
  AlignedPairList pairs;
};

struct LossBreakdown {
  double alignment = 0.0;
  double regularization = 0.0;
  double total = 0.0;
};

/// Mean alignment loss over the pairs with a non-empty pair list, plus
/// lambda times the regularizer. Throws AllPairsEmpty if nothing contributes.
LossBreakdown evaluate_loss(std::span<const TrainingPair> batch, const ToyEncoderParams& params,
                            const LossConfig& config);
double total_loss(std::span<const TrainingPair> batch, const ToyEncoderParams& params, const LossConfig& config);

/// Analytic gradient of total_loss with respect to the current weights.
/// Per-sentence gradients are summed in batch order regardless of `threads`.
ToyEncoderWeights loss_gradient(std::span<const TrainingPair> batch, const ToyEncoderParams& params,
                                const LossConfig& config, unsigned threads = 1);

std::pair<LossBreakdown, ToyEncoderWeights> loss_and_gradient(std::span<const TrainingPair> batch,
                                                              const ToyEncoderParams& params,
                                                              const LossConfig& config, unsigned threads = 1);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t steps = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Adam with the usual constants and no weight decay.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(ToyEncoderWeights& weights, const ToyEncoderWeights& gradient);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

struct LossRecord {
  std::size_t step = 0;
  double alignment = 0.0;
  double regularization = 0.0;
  double total = 0.0;

  bool operator==(const LossRecord&) const = default;
};

struct TrainResult {
  ToyEncoderParams params;
  std::vector<LossRecord> history;
};

/// Mini-batch Adam on total_loss. Batches are drawn from the pairs with a
/// non-empty pair list by reshuffling every epoch; the history holds the
/// batch loss of each step, measured before that step's update.
TrainResult train(std::span<const TrainingPair> corpus, ToyEncoderParams params, const TrainConfig& train_config,
                  const LossConfig& loss_config);

// ---------------------------------------------------------------------------
// Checkpoints: "QECKP1" | u32 header length | header JSON | current E, U |
// pretrained E, U, all binary32 little-endian.

struct Checkpoint {
  ToyEncoderParams params;
  std::vector<std::string> tokens;  // token text per embedding row
};

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// "step,alignment,regularization,total" CSV.
void write_history_csv(const std::vector<LossRecord>& history, std::ostream& out);

}  // namespace qe
