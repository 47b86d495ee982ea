#include "qe/align_train.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "binary_io.hpp"
#include "json.hpp"
#include "qe/error.hpp"
#include "qe/rng.hpp"

namespace qe {

AlignedPairList expand_to_subwords(const PairSet& word_pairs, std::span<const std::uint32_t> source_word_map,
                                   std::span<const std::uint32_t> target_word_map) {
  auto subwords_of = [](std::span<const std::uint32_t> map) {
    std::map<std::uint32_t, std::vector<std::uint32_t>> out;
    for (std::size_t t = 0; t < map.size(); ++t) {
      if (map[t] != kSpecialWordIndex) out[map[t]].push_back(static_cast<std::uint32_t>(t));
    }
    return out;
  };
  const auto src = subwords_of(source_word_map);
  const auto tgt = subwords_of(target_word_map);

  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& [sw, tw] : word_pairs) {
    const auto s = src.find(sw);
    const auto t = tgt.find(tw);
    if (s == src.end()) throw Error(ErrorKind::IndexOutOfRange, "source word " + std::to_string(sw));
    if (t == tgt.end()) throw Error(ErrorKind::IndexOutOfRange, "target word " + std::to_string(tw));
    for (auto a : s->second) {
      for (auto b : t->second) pairs.emplace(a, b);
    }
  }
  return {pairs.begin(), pairs.end()};
}

namespace {

void check_config(const LossConfig& config) {
  if (!(config.temperature > 0.0)) {
    throw Error(ErrorKind::TemperatureNonPositive, "temperature " + std::to_string(config.temperature));
  }
}

void check_pairs(const AlignedPairList& pairs, std::size_t n, std::size_t m) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyPairList, "no aligned pairs");
  for (const auto& [s, t] : pairs) {
    if (s >= n || t >= m) {
      throw Error(ErrorKind::IndexOutOfRange, "pair (" + std::to_string(s) + "," + std::to_string(t) +
                                                  ") outside " + std::to_string(n) + "x" + std::to_string(m));
    }
  }
}

// Loss of one sentence pair from its token-level cosine table `cos`
// (source tokens x target tokens). When `grad` is non-null it receives
// dLoss/dcos, accumulated.
double sentence_loss(const Matrix& cos, const AlignedPairList& pairs, const LossConfig& config, Matrix* grad) {
  const std::size_t b = pairs.size();
  const double inv_t = 1.0 / config.temperature;
  const double scale = inv_t / (2.0 * static_cast<double>(b));
  double sum = 0.0;
  std::vector<double> logits;

  for (std::size_t i = 0; i < b; ++i) {
    const auto [si, ti] = pairs[i];
    const double positive = cos(si, ti) * inv_t;

    // Source token si against the candidate targets.
    logits.clear();
    if (config.negatives == NegativeSet::PairList) {
      for (std::size_t j = 0; j < b; ++j) logits.push_back(cos(si, pairs[j].second) * inv_t);
    } else {
      for (std::size_t c = 0; c < cos.cols(); ++c) logits.push_back(cos(si, c) * inv_t);
    }
    double lse = logsumexp(logits);
    sum += lse - positive;
    if (grad) {
      for (std::size_t j = 0; j < logits.size(); ++j) {
        const std::size_t col = config.negatives == NegativeSet::PairList ? pairs[j].second : j;
        (*grad)(si, col) += std::exp(logits[j] - lse) * scale;
      }
      (*grad)(si, ti) -= scale;
    }

    // Target token ti against the candidate sources.
    logits.clear();
    if (config.negatives == NegativeSet::PairList) {
      for (std::size_t j = 0; j < b; ++j) logits.push_back(cos(pairs[j].first, ti) * inv_t);
    } else {
      for (std::size_t r = 0; r < cos.rows(); ++r) logits.push_back(cos(r, ti) * inv_t);
    }
    lse = logsumexp(logits);
    sum += lse - positive;
    if (grad) {
      for (std::size_t j = 0; j < logits.size(); ++j) {
        const std::size_t row = config.negatives == NegativeSet::PairList ? pairs[j].first : j;
        (*grad)(row, ti) += std::exp(logits[j] - lse) * scale;
      }
      (*grad)(si, ti) -= scale;
    }
  }
  return sum / (2.0 * static_cast<double>(b));
}

}  // namespace

double alignment_loss(const EmbeddingMatrix& source, const EmbeddingMatrix& target, const AlignedPairList& pairs,
                      const LossConfig& config) {
  check_config(config);
  check_pairs(pairs, source.rows(), target.rows());
  return sentence_loss(cosine_similarity_matrix(source, target), pairs, config, nullptr);
}

// ---------------------------------------------------------------------------

double& ToyEncoderWeights::at(std::size_t k) {
  const std::size_t e = embedding.values().size();
  return k < e ? embedding.values()[k] : mixing.values()[k - e];
}

double ToyEncoderWeights::at(std::size_t k) const {
  const std::size_t e = embedding.values().size();
  return k < e ? embedding.values()[k] : mixing.values()[k - e];
}

ToyEncoderParams::ToyEncoderParams(Matrix embedding, Matrix mixing)
    : ToyEncoderParams(ToyEncoderWeights{embedding, mixing}, ToyEncoderWeights{embedding, mixing}) {}

ToyEncoderParams::ToyEncoderParams(ToyEncoderWeights current, ToyEncoderWeights pretrained)
    : current_(std::move(current)), pretrained_(std::move(pretrained)) {
  const std::size_t d = current_.embedding.cols();
  if (d == 0 || current_.embedding.rows() == 0) throw Error(ErrorKind::InvalidArgument, "empty embedding table");
  if (current_.mixing.rows() != d || current_.mixing.cols() != 2 * d) {
    throw Error(ErrorKind::DimMismatch, "mixing matrix must be dim x 2*dim");
  }
  if (pretrained_.embedding.rows() != current_.embedding.rows() || pretrained_.embedding.cols() != d ||
      pretrained_.mixing.rows() != d || pretrained_.mixing.cols() != 2 * d) {
    throw Error(ErrorKind::DimMismatch, "pretrained snapshot shape differs from the current weights");
  }
}

ToyEncoderParams ToyEncoderParams::random(std::size_t vocab_size, std::size_t dim, std::uint64_t seed,
                                          double embedding_scale, double context_weight, double mixing_noise) {
  Rng rng(seed);
  Matrix e(vocab_size, dim);
  for (double& v : e.values()) v = rng.normal() * embedding_scale;
  Matrix u(dim, 2 * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < 2 * dim; ++c) {
      const double base = c == r ? 1.0 : (c == r + dim ? context_weight : 0.0);
      u(r, c) = base + rng.normal() * mixing_noise;
    }
  }
  return ToyEncoderParams(std::move(e), std::move(u));
}

namespace {

struct EncoderPass {
  Matrix inputs;  // n x 2d: own embedding, then context mean
  Matrix outputs;  // n x d, unit rows
  std::vector<double> norms;  // |U x| per token
};

EncoderPass encode(std::span<const std::uint32_t> ids, const ToyEncoderWeights& w) {
  const std::size_t n = ids.size();
  const std::size_t d = w.embedding.cols();
  for (auto id : ids) {
    if (id >= w.embedding.rows()) {
      throw Error(ErrorKind::IdOutOfRange, "token id " + std::to_string(id) + " >= vocab " +
                                               std::to_string(w.embedding.rows()));
    }
  }
  EncoderPass pass{Matrix(n, 2 * d), Matrix(n, d), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    auto x = pass.inputs.row(i);
    const auto own = w.embedding.row(ids[i]);
    std::copy(own.begin(), own.end(), x.begin());
    if (n > 1) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const auto other = w.embedding.row(ids[k]);
        for (std::size_t c = 0; c < d; ++c) x[d + c] += other[c];
      }
      for (std::size_t c = 0; c < d; ++c) x[d + c] /= static_cast<double>(n - 1);
    }
    auto h = pass.outputs.row(i);
    for (std::size_t r = 0; r < d; ++r) h[r] = dot(w.mixing.row(r), x);
    const double norm = l2_norm(h);
    if (!(norm >= 1e-12)) throw Error(ErrorKind::ZeroRow, "toy encoder output " + std::to_string(i));
    pass.norms[i] = norm;
    for (double& v : h) v /= norm;
  }
  return pass;
}

// Sparse gradient of one sentence pair: touched embedding rows plus a dense
// mixing gradient.
struct SentenceGradient {
  double loss = 0.0;
  std::map<std::uint32_t, std::vector<double>> rows;
  Matrix mixing;
};

// Backpropagates dLoss/dh (n x d) through normalization, mixing and the
// context mean.
void backward(std::span<const std::uint32_t> ids, const EncoderPass& pass, const Matrix& grad_out,
              const ToyEncoderWeights& w, SentenceGradient& g) {
  const std::size_t n = ids.size();
  const std::size_t d = w.embedding.cols();
  std::vector<double> gz(d), gx(2 * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = pass.outputs.row(i);
    const auto gh = grad_out.row(i);
    const double radial = dot(h, gh);
    for (std::size_t r = 0; r < d; ++r) gz[r] = (gh[r] - radial * h[r]) / pass.norms[i];

    const auto x = pass.inputs.row(i);
    std::fill(gx.begin(), gx.end(), 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      auto urow = w.mixing.row(r);
      auto grow = g.mixing.row(r);
      for (std::size_t c = 0; c < 2 * d; ++c) {
        grow[c] += gz[r] * x[c];
        gx[c] += urow[c] * gz[r];
      }
    }
    auto& own = g.rows.try_emplace(ids[i], d, 0.0).first->second;
    for (std::size_t c = 0; c < d; ++c) own[c] += gx[c];
    if (n > 1) {
      const double share = 1.0 / static_cast<double>(n - 1);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        auto& other = g.rows.try_emplace(ids[k], d, 0.0).first->second;
        for (std::size_t c = 0; c < d; ++c) other[c] += gx[d + c] * share;
      }
    }
  }
}

SentenceGradient sentence_gradient(const TrainingPair& pair, const ToyEncoderWeights& w, const LossConfig& config,
                                   bool with_gradient) {
  const EncoderPass src = encode(pair.source_ids, w);
  const EncoderPass tgt = encode(pair.target_ids, w);
  check_pairs(pair.pairs, pair.source_ids.size(), pair.target_ids.size());

  // Outputs are unit rows, so plain dot products are the cosines.
  Matrix cos(src.outputs.rows(), tgt.outputs.rows());
  for (std::size_t a = 0; a < cos.rows(); ++a) {
    for (std::size_t b = 0; b < cos.cols(); ++b) cos(a, b) = dot(src.outputs.row(a), tgt.outputs.row(b));
  }
  SentenceGradient g;
  if (!with_gradient) {
    g.loss = sentence_loss(cos, pair.pairs, config, nullptr);
    return g;
  }
  Matrix gcos(cos.rows(), cos.cols());
  g.loss = sentence_loss(cos, pair.pairs, config, &gcos);

  const std::size_t d = w.embedding.cols();
  Matrix gsrc(cos.rows(), d), gtgt(cos.cols(), d);
  for (std::size_t a = 0; a < cos.rows(); ++a) {
    for (std::size_t b = 0; b < cos.cols(); ++b) {
      const double coef = gcos(a, b);
      if (coef == 0.0) continue;
      const auto hs = src.outputs.row(a);
      const auto ht = tgt.outputs.row(b);
      auto gs = gsrc.row(a);
      auto gt = gtgt.row(b);
      for (std::size_t c = 0; c < d; ++c) {
        gs[c] += coef * ht[c];
        gt[c] += coef * hs[c];
      }
    }
  }
  g.mixing = Matrix(d, 2 * d);
  backward(pair.source_ids, src, gsrc, w, g);
  backward(pair.target_ids, tgt, gtgt, w, g);
  return g;
}

std::vector<const TrainingPair*> contributing(std::span<const TrainingPair> batch) {
  std::vector<const TrainingPair*> out;
  for (const auto& p : batch) {
    if (!p.pairs.empty()) out.push_back(&p);
  }
  if (out.empty()) throw Error(ErrorKind::AllPairsEmpty, "no sentence pair in the batch has aligned pairs");
  return out;
}

std::vector<SentenceGradient> per_sentence(const std::vector<const TrainingPair*>& work, const ToyEncoderWeights& w,
                                           const LossConfig& config, bool with_gradient, unsigned threads) {
  std::vector<SentenceGradient> out(work.size());
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(work.size()));
  if (threads == 1) {
    for (std::size_t k = 0; k < work.size(); ++k) out[k] = sentence_gradient(*work[k], w, config, with_gradient);
    return out;
  }
  std::vector<std::exception_ptr> failures(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < work.size(); k += threads) {
            out[k] = sentence_gradient(*work[k], w, config, with_gradient);
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
  return out;
}

}  // namespace

EmbeddingMatrix toy_encode(std::span<const std::uint32_t> ids, const ToyEncoderParams& params) {
  return encode(ids, params.weights()).outputs;
}

double regularization_loss(const ToyEncoderParams& params) {
  const auto& w = params.weights();
  const auto& p = params.pretrained();
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double diff = w.at(k) - p.at(k);
    sum += diff * diff;
  }
  return sum;
}

LossBreakdown evaluate_loss(std::span<const TrainingPair> batch, const ToyEncoderParams& params,
                            const LossConfig& config) {
  check_config(config);
  const auto work = contributing(batch);
  const auto grads = per_sentence(work, params.weights(), config, false, 1);
  LossBreakdown out;
  for (const auto& g : grads) out.alignment += g.loss;
  out.alignment /= static_cast<double>(grads.size());
  out.regularization = regularization_loss(params);
  out.total = out.alignment + config.lambda * out.regularization;
  return out;
}

double total_loss(std::span<const TrainingPair> batch, const ToyEncoderParams& params, const LossConfig& config) {
  return evaluate_loss(batch, params, config).total;
}

std::pair<LossBreakdown, ToyEncoderWeights> loss_and_gradient(std::span<const TrainingPair> batch,
                                                              const ToyEncoderParams& params,
                                                              const LossConfig& config, unsigned threads) {
  check_config(config);
  const auto work = contributing(batch);
  const auto& w = params.weights();
  const auto grads = per_sentence(work, w, config, true, threads);

  const double inv_count = 1.0 / static_cast<double>(grads.size());
  ToyEncoderWeights total{Matrix(w.embedding.rows(), w.embedding.cols()), Matrix(w.mixing.rows(), w.mixing.cols())};
  LossBreakdown loss;
  // Fixed batch order, independent of how the per-sentence work was scheduled.
  for (const auto& g : grads) {
    loss.alignment += g.loss;
    for (const auto& [id, row] : g.rows) {
      auto dst = total.embedding.row(id);
      for (std::size_t c = 0; c < row.size(); ++c) dst[c] += row[c] * inv_count;
    }
    auto& dm = total.mixing.values();
    const auto& sm = g.mixing.values();
    for (std::size_t k = 0; k < dm.size(); ++k) dm[k] += sm[k] * inv_count;
  }
  loss.alignment *= inv_count;
  loss.regularization = regularization_loss(params);
  loss.total = loss.alignment + config.lambda * loss.regularization;

  const auto& p = params.pretrained();
  for (std::size_t k = 0; k < total.size(); ++k) total.at(k) += 2.0 * config.lambda * (w.at(k) - p.at(k));
  return {loss, std::move(total)};
}

ToyEncoderWeights loss_gradient(std::span<const TrainingPair> batch, const ToyEncoderParams& params,
                                const LossConfig& config, unsigned threads) {
  return loss_and_gradient(batch, params, config, threads).second;
}

// ---------------------------------------------------------------------------

void AdamOptimizer::step(ToyEncoderWeights& weights, const ToyEncoderWeights& gradient) {
  const std::size_t n = weights.size();
  if (m_.empty()) {
    m_.assign(n, 0.0);
    v_.assign(n, 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < n; ++k) {
    const double g = gradient.at(k);
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
    weights.at(k) -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

TrainResult train(std::span<const TrainingPair> corpus, ToyEncoderParams params, const TrainConfig& train_config,
                  const LossConfig& loss_config) {
  check_config(loss_config);
  if (!(train_config.learning_rate > 0.0) || train_config.batch_size == 0) {
    throw Error(ErrorKind::InvalidArgument, "learning rate and batch size must be positive");
  }
  TrainResult result{std::move(params), {}};
  if (train_config.steps == 0) return result;

  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    if (!corpus[k].pairs.empty()) eligible.push_back(k);
  }
  if (eligible.empty()) throw Error(ErrorKind::AllPairsEmpty, "training corpus has no aligned pairs");

  Rng rng(train_config.seed);
  std::vector<std::size_t> order = eligible;
  rng.shuffle(order);
  std::size_t cursor = 0;

  AdamOptimizer adam(train_config.learning_rate);
  std::vector<TrainingPair> batch;
  result.history.reserve(train_config.steps);
  const std::size_t batch_size = std::min(train_config.batch_size, eligible.size());

  for (std::size_t step = 0; step < train_config.steps; ++step) {
    batch.clear();
    while (batch.size() < batch_size) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(corpus[order[cursor++]]);
    }
    auto [loss, grad] = loss_and_gradient(batch, result.params, loss_config, train_config.threads);
    bool finite = std::isfinite(loss.total);
    for (std::size_t k = 0; finite && k < grad.size(); ++k) finite = std::isfinite(grad.at(k));
    if (!finite) {
      std::ostringstream msg;
      msg << "step " << step << ": alignment " << loss.alignment << ", regularization " << loss.regularization
          << ", total " << loss.total << (std::isfinite(loss.total) ? " (gradient not finite)" : "");
      throw Error(ErrorKind::NonFiniteLoss, msg.str());
    }
    result.history.push_back({step, loss.alignment, loss.regularization, loss.total});
    adam.step(result.params.weights(), grad);
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCheckpointMagic = "QECKP1";

void put_matrix(std::ostream& out, const Matrix& m) {
  for (double v : m.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

Matrix get_matrix(detail::Reader& reader, std::size_t rows, std::size_t cols, const std::string& what) {
  std::vector<double> values;
  for (std::size_t k = 0; k < rows * cols; ++k) values.push_back(std::bit_cast<float>(reader.u32(what)));
  return Matrix(rows, cols, std::move(values));
}

}  // namespace

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto& p = checkpoint.params;
  if (!checkpoint.tokens.empty() && checkpoint.tokens.size() != p.vocab_size()) {
    throw Error(ErrorKind::DimMismatch, "token list does not match the embedding table");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  nlohmann::json header;
  header["vocab_size"] = p.vocab_size();
  header["dim"] = p.dim();
  header["encoder"] = "toy-context-mixing";
  header["tokens"] = checkpoint.tokens;
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_string(out, header.dump());
  put_matrix(out, p.weights().embedding);
  put_matrix(out, p.weights().mixing);
  put_matrix(out, p.pretrained().embedding);
  put_matrix(out, p.pretrained().mixing);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  char magic[6] = {};
  in.read(magic, 6);
  if (in.gcount() != 6 || std::string_view(magic, 6) != kCheckpointMagic) {
    throw Error(ErrorKind::BadMagic, "not a QECKP1 checkpoint");
  }
  detail::Reader reader(in);
  nlohmann::json header;
  std::size_t vocab = 0, dim = 0;
  std::vector<std::string> tokens;
  try {
    header = nlohmann::json::parse(reader.string("header"));
    vocab = header.at("vocab_size").get<std::size_t>();
    dim = header.at("dim").get<std::size_t>();
    tokens = header.value("tokens", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad checkpoint header: ") + e.what());
  }
  ToyEncoderWeights current{get_matrix(reader, vocab, dim, "embedding"), get_matrix(reader, dim, 2 * dim, "mixing")};
  ToyEncoderWeights pretrained{get_matrix(reader, vocab, dim, "pretrained embedding"),
                               get_matrix(reader, dim, 2 * dim, "pretrained mixing")};
  return {ToyEncoderParams(std::move(current), std::move(pretrained)), std::move(tokens)};
}

void write_history_csv(const std::vector<LossRecord>& history, std::ostream& out) {
  out << "step,alignment,regularization,total\n";
  char buf[64];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
  };
  for (const auto& r : history) {
    out << r.step << ',';
    put(r.alignment);
    out << ',';
    put(r.regularization);
    out << ',';
    put(r.total);
    out << '\n';
  }
}

}  // namespace qe
