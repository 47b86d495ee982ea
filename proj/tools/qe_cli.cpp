// qe: command-line front end for scoring, vocabulary building, alignment
// training and evaluation.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qe/align_eval.hpp"
#include "qe/align_train.hpp"
#include "qe/data_io.hpp"
#include "qe/error.hpp"
#include "qe/harness.hpp"
#include "qe/scorer.hpp"
#include "qe/ter.hpp"
#include "qe/text.hpp"
#include "qe/vocab.hpp"

namespace {

using qe::Error;
using qe::ErrorKind;

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<qe::QERecord> load_dataset(const std::string& path, bool wmt) {
  return qe::read_dataset(path, wmt ? qe::DatasetFormat::wmt() : qe::DatasetFormat{});
}

qe::text::TokenizerPolicy policy_of(bool lowercase) { return qe::text::TokenizerPolicy{lowercase}; }

/// Values keyed by id, paired up in the order of `pred`.
void pair_by_id(const std::vector<std::pair<std::uint32_t, double>>& pred,
                const std::vector<std::pair<std::uint32_t, double>>& gold, std::vector<double>& p,
                std::vector<double>& g) {
  std::map<std::uint32_t, double> by_id(gold.begin(), gold.end());
  for (const auto& [id, v] : pred) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::MissingColumn, "no gold value for id " + std::to_string(id));
    p.push_back(v);
    g.push_back(it->second);
  }
  if (p.size() != gold.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(p.size()) + " predictions vs " + std::to_string(gold.size()) + " gold values");
  }
}

std::vector<std::uint32_t> parse_layers(const std::vector<std::string>& items) {
  std::vector<std::uint32_t> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part.empty()) continue;
      try {
        out.push_back(static_cast<std::uint32_t>(std::stoul(part)));
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument, "bad layer '" + part + "'");
      }
    }
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no layers given");
  return out;
}

std::string describe(const CLI::App& cmd) {
  // Stable text of every option value, for the provenance digest.
  std::ostringstream out;
  out << cmd.get_name();
  for (const auto* opt : cmd.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    out << ' ' << opt->get_name() << '=';
    for (const auto& r : opt->results()) out << r << ';';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string dataset, src_emb, hyp_emb, vocab, unk = qe::kDefaultUnkSymbol, out, metric = "r";
  std::uint32_t layer = 8;
  unsigned threads = 1;
  bool wmt = false, keep_special = false, lowercase = false;
};

int run_score(const ScoreArgs& a, const CLI::App& cmd) {
  const auto records = load_dataset(a.dataset, a.wmt);
  const auto src = qe::read_embeddings(qe::layer_path(a.src_emb, a.layer));
  const auto hyp = qe::read_embeddings(qe::layer_path(a.hyp_emb, a.layer));
  qe::ScorerConfig cfg;
  cfg.layer = a.layer;
  cfg.score_kind = a.metric == "p" ? qe::ScoreKind::Precision : a.metric == "f1" ? qe::ScoreKind::F1 : qe::ScoreKind::Recall;
  cfg.exclude_special = !a.keep_special;
  std::optional<qe::Vocabulary> vocab;
  if (!a.vocab.empty()) {
    vocab = qe::read_vocabulary(a.vocab);
    cfg.apply_unk = true;
  }
  const auto series = qe::score_dataset(records, src, hyp, cfg, vocab ? &*vocab : nullptr, policy_of(a.lowercase),
                                        a.unk, a.threads);

  std::vector<std::uint32_t> ids;
  for (const auto& r : records) ids.push_back(r.id);
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    qe::write_id_values(ids, series.values, out);
  } else {
    qe::write_id_values(ids, series.values, std::cout);
  }
  std::cerr << "scored " << records.size() << " records, mean " << qe::format_double(qe::order_free_mean(series.values))
            << "\n";
  if (series.labels.size() == series.values.size() && series.values.size() >= 2) {
    const auto report = qe::evaluate(series.values, series.labels, "xlmrscore-" + a.metric, describe(cmd));
    std::cerr << "pearson vs gold " << qe::format_double(report.pearson) << " (n=" << report.n << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// build-vocab / replace-unk

struct VocabArgs {
  std::string corpus, out, cmp = "gt";
  std::uint64_t min_count = 2;
  unsigned threads = 1;
  bool lowercase = false;
};

int run_build_vocab(const VocabArgs& a) {
  std::ifstream in(a.corpus, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + a.corpus);
  qe::VocabConfig cfg;
  cfg.threshold = a.min_count;
  cfg.cmp = a.cmp == "ge" ? qe::ThresholdCmp::GreaterEqual : qe::ThresholdCmp::Greater;
  cfg.policy = policy_of(a.lowercase);
  qe::Vocabulary vocab;
  if (a.threads > 1) {
    const auto counts = qe::count_words_parallel(in, cfg.policy, a.threads);
    vocab = qe::Vocabulary::from_counts(counts, cfg.min_count(), cfg.policy.tag());
  } else {
    vocab = qe::build_vocabulary(in, cfg);
  }
  qe::write_vocabulary(vocab, std::filesystem::path(a.out));
  std::cerr << vocab.size() << " words with count >= " << vocab.min_count() << "\n";
  return 0;
}

struct ReplaceArgs {
  std::string dataset, vocab, out, unk = qe::kDefaultUnkSymbol;
  bool wmt = false, lowercase = false;
};

int run_replace_unk(const ReplaceArgs& a) {
  auto records = load_dataset(a.dataset, a.wmt);
  const auto vocab = qe::read_vocabulary(a.vocab);
  std::size_t replaced = 0, words = 0;
  for (auto& r : records) {
    r.hypothesis = qe::replace_untranslated_text(r.hypothesis, vocab, policy_of(a.lowercase), a.unk);
    for (const auto& w : qe::text::split_whitespace(r.hypothesis)) {
      ++words;
      if (w == a.unk) ++replaced;
    }
  }
  auto out = open_out(a.out);
  qe::write_dataset(out, records);
  std::cerr << replaced << " of " << words << " hypothesis words are " << a.unk << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ter

struct TerArgs {
  std::string dataset, out;
  bool wmt = false, case_sensitive = false, lowercase = false;
  std::size_t max_shift_distance = 50, max_shift_length = 10;
};

int run_ter(const TerArgs& a) {
  const auto records = load_dataset(a.dataset, a.wmt);
  qe::TERConfig cfg;
  cfg.case_sensitive = a.case_sensitive;
  cfg.max_shift_distance = a.max_shift_distance;
  cfg.max_shift_length = a.max_shift_length;
  std::vector<std::uint32_t> ids;
  std::vector<double> values;
  std::size_t edits = 0, ref_words = 0;
  for (const auto& r : records) {
    if (!r.post_edit) throw Error(ErrorKind::MissingColumn, "post_edit missing for id " + std::to_string(r.id));
    auto hyp = qe::text::tokenize(r.hypothesis, policy_of(a.lowercase));
    auto ref = qe::text::tokenize(*r.post_edit, policy_of(a.lowercase));
    if (!hyp || !ref) throw Error(ErrorKind::InvalidEncoding, "id " + std::to_string(r.id));
    const auto result = qe::ter(*hyp, *ref, cfg);
    ids.push_back(r.id);
    values.push_back(result.ter);
    edits += result.edits();
    ref_words += result.ref_length;
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    qe::write_id_values(ids, values, out);
  } else {
    qe::write_id_values(ids, values, std::cout);
  }
  if (!values.empty()) {
    std::cerr << "corpus TER " << qe::format_double(static_cast<double>(edits) / static_cast<double>(ref_words))
              << ", mean sentence HTER " << qe::format_double(qe::order_free_mean(values)) << " (n=" << values.size()
              << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train-align / encode

struct TrainArgs {
  std::string corpus, checkpoint_out, history_out, init_checkpoint, negatives = "pairs";
  std::vector<std::string> alignments;
  std::size_t steps = 100000, batch = 32, dim = 16;
  double lr = 1e-4, temperature = 0.1, lambda = 1.0, init_scale = 0.01;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Word-level toy vocabulary: every distinct word of the corpus plus <unk>.
std::vector<std::string> corpus_tokens(const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs) {
  std::set<std::string> words{qe::kDefaultUnkSymbol};
  for (const auto& [s, t] : pairs) {
    words.insert(s.begin(), s.end());
    words.insert(t.begin(), t.end());
  }
  return {words.begin(), words.end()};
}

std::vector<std::uint32_t> to_ids(const std::vector<std::string>& words, const std::map<std::string, std::uint32_t>& index) {
  std::vector<std::uint32_t> ids;
  const auto unk = index.find(qe::kDefaultUnkSymbol);
  for (const auto& w : words) {
    auto it = index.find(w);
    if (it == index.end()) {
      if (unk == index.end()) throw Error(ErrorKind::IdOutOfRange, "word '" + w + "' not in the encoder vocabulary");
      it = unk;
    }
    ids.push_back(it->second);
  }
  return ids;
}

int run_train_align(const TrainArgs& a, const CLI::App& cmd) {
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> text;
  for (const auto& line : read_lines(a.corpus)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorKind::RaggedRow, "corpus line " + std::to_string(text.size() + 1));
    text.emplace_back(qe::text::split_whitespace(line.substr(0, tab)), qe::text::split_whitespace(line.substr(tab + 1)));
  }
  if (a.alignments.empty() || a.alignments.size() > 2) {
    throw Error(ErrorKind::InvalidArgument, "give one alignment file, or two to intersect");
  }
  auto gold = qe::read_alignments(a.alignments[0], true);
  if (a.alignments.size() == 2) {
    const auto other = qe::read_alignments(a.alignments[1], true);
    if (other.size() != gold.size()) throw Error(ErrorKind::LengthMismatch, "alignment files differ in length");
    for (std::size_t k = 0; k < gold.size(); ++k) gold[k] = qe::intersect_alignments(gold[k], other[k]);
  }
  if (gold.size() != text.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(text.size()) + " corpus lines vs " + std::to_string(gold.size()) + " alignments");
  }

  std::optional<qe::Checkpoint> init;
  if (!a.init_checkpoint.empty()) init = qe::read_checkpoint(a.init_checkpoint);
  const auto tokens = init ? init->tokens : corpus_tokens(text);
  std::map<std::string, std::uint32_t> index;
  for (std::size_t k = 0; k < tokens.size(); ++k) index[tokens[k]] = static_cast<std::uint32_t>(k);

  std::vector<qe::TrainingPair> corpus;
  for (std::size_t k = 0; k < text.size(); ++k) {
    qe::TrainingPair tp;
    tp.source_ids = to_ids(text[k].first, index);
    tp.target_ids = to_ids(text[k].second, index);
    std::vector<std::uint32_t> smap(tp.source_ids.size()), tmap(tp.target_ids.size());
    for (std::uint32_t i = 0; i < smap.size(); ++i) smap[i] = i;
    for (std::uint32_t j = 0; j < tmap.size(); ++j) tmap[j] = j;
    tp.pairs = qe::expand_to_subwords(gold[k].sure, smap, tmap);
    corpus.push_back(std::move(tp));
  }

  auto params = init ? init->params : qe::ToyEncoderParams::random(tokens.size(), a.dim, a.seed, a.init_scale);
  qe::TrainConfig tc;
  tc.learning_rate = a.lr;
  tc.batch_size = a.batch;
  tc.steps = a.steps;
  tc.seed = a.seed;
  tc.threads = a.threads;
  qe::LossConfig lc;
  lc.temperature = a.temperature;
  lc.lambda = a.lambda;
  lc.negatives = a.negatives == "sentence" ? qe::NegativeSet::SentenceTokens : qe::NegativeSet::PairList;

  const auto before = qe::evaluate_loss(corpus, params, lc);
  auto result = qe::train(corpus, std::move(params), tc, lc);
  const auto after = qe::evaluate_loss(corpus, result.params, lc);
  std::cerr << "alignment loss " << qe::format_double(before.alignment) << " -> " << qe::format_double(after.alignment)
            << ", regularizer " << qe::format_double(after.regularization) << "\n";

  if (!a.checkpoint_out.empty()) qe::write_checkpoint({result.params, tokens}, a.checkpoint_out);
  if (!a.history_out.empty()) {
    auto out = open_out(a.history_out);
    qe::write_history_csv(result.history, out);
  }
  std::cerr << "config digest " << qe::config_digest(describe(cmd)) << "\n";
  return 0;
}

struct EncodeArgs {
  std::string checkpoint, text, dataset, side = "source", vocab, unk = qe::kDefaultUnkSymbol, out;
  std::uint32_t layer = 0;
  bool wmt = false, lowercase = false;
};

int run_encode(const EncodeArgs& a) {
  if (a.text.empty() == a.dataset.empty()) throw Error(ErrorKind::InvalidArgument, "give exactly one of --text, --dataset");
  const auto ckp = qe::read_checkpoint(a.checkpoint);
  std::map<std::string, std::uint32_t> index;
  for (std::size_t k = 0; k < ckp.tokens.size(); ++k) index[ckp.tokens[k]] = static_cast<std::uint32_t>(k);

  std::vector<std::pair<std::uint32_t, std::string>> lines;
  if (!a.text.empty()) {
    std::uint32_t id = 0;
    for (auto& l : read_lines(a.text)) lines.emplace_back(id++, std::move(l));
  } else {
    for (auto& r : load_dataset(a.dataset, a.wmt)) {
      if (a.side == "hypothesis") {
        lines.emplace_back(r.id, r.hypothesis);
      } else if (a.side == "post_edit") {
        if (!r.post_edit) throw Error(ErrorKind::MissingColumn, "post_edit missing for id " + std::to_string(r.id));
        lines.emplace_back(r.id, *r.post_edit);
      } else {
        lines.emplace_back(r.id, r.source);
      }
    }
  }
  std::optional<qe::Vocabulary> vocab;
  if (!a.vocab.empty()) vocab = qe::read_vocabulary(a.vocab);

  qe::EmbeddingSet set;
  set.manifest.layer = a.layer;
  set.manifest.dim = static_cast<std::uint32_t>(ckp.params.dim());
  set.manifest.encoder = "toy:" + a.checkpoint;
  for (const auto& [id, line] : lines) {
    const std::string textline = vocab ? qe::replace_untranslated_text(line, *vocab, policy_of(a.lowercase), a.unk) : line;
    const auto words = qe::text::split_whitespace(textline);
    if (words.empty()) throw Error(ErrorKind::EmptySentence, "id " + std::to_string(id));
    qe::SentenceEmbedding e;
    e.id = id;
    e.tokens = words;
    for (std::uint32_t w = 0; w < words.size(); ++w) e.word_index.push_back(w);
    e.vectors = qe::toy_encode(to_ids(words, index), ckp.params);
    set.sentences.push_back(std::move(e));
  }
  qe::write_embeddings(set, std::filesystem::path(a.out));
  std::cerr << set.sentences.size() << " sentences encoded\n";
  return 0;
}

// ---------------------------------------------------------------------------
// extract-align / aer / layer-sweep

struct ExtractArgs {
  std::string src_emb, tgt_emb, policy = "mutual", out;
};

qe::ExtractionPolicy policy_from(const std::string& s) {
  return s == "greedy" ? qe::ExtractionPolicy::IterativeGreedy : qe::ExtractionPolicy::MutualArgmax;
}

int run_extract(const ExtractArgs& a) {
  const auto src = qe::read_embeddings(a.src_emb);
  const auto tgt = qe::read_embeddings(a.tgt_emb);
  if (src.sentences.size() != tgt.sentences.size()) {
    throw Error(ErrorKind::LengthMismatch, "source and target files hold different sentence counts");
  }
  std::ostringstream text;
  for (std::size_t k = 0; k < src.sentences.size(); ++k) {
    if (src.sentences[k].id != tgt.sentences[k].id) {
      throw Error(ErrorKind::MissingEmbedding, "sentence " + std::to_string(k) + ": ids differ");
    }
    text << qe::format_pharaoh(qe::extract_sentence_alignment(src.sentences[k], tgt.sentences[k], policy_from(a.policy)))
         << '\n';
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    out << text.str();
  } else {
    std::cout << text.str();
  }
  return 0;
}

struct AerArgs {
  std::string pred, gold;
};

int run_aer(const AerArgs& a) {
  const auto pred = qe::read_alignments(a.pred, true);
  const auto gold = qe::read_alignments(a.gold);
  std::vector<qe::PairSet> predicted;
  for (const auto& p : pred) predicted.push_back(p.possible);
  std::cout << "AER " << qe::format_double(qe::corpus_aer(predicted, gold)) << " (sentences=" << gold.size() << ")\n";
  return 0;
}

struct SweepArgs {
  std::string src_emb, tgt_emb, gold, policy = "mutual", out;
  std::vector<std::string> layers;
};

int run_layer_sweep(const SweepArgs& a) {
  const auto layers = parse_layers(a.layers);
  const auto gold = qe::read_alignments(a.gold);
  std::vector<qe::EmbeddingSet> src, tgt;
  for (auto layer : layers) {
    src.push_back(qe::read_embeddings(qe::layer_path(a.src_emb, layer)));
    tgt.push_back(qe::read_embeddings(qe::layer_path(a.tgt_emb, layer)));
    // Files named by template carry their layer; trust the template when the manifest disagrees.
    src.back().manifest.layer = tgt.back().manifest.layer = layer;
  }
  const auto sweep = qe::layer_sweep(src, tgt, gold, layers, policy_from(a.policy));
  std::ostringstream csv;
  csv << "layer,aer\n";
  for (const auto& r : sweep) {
    csv << r.layer << ',' << qe::format_double(r.aer) << '\n';
    std::cout << "layer " << r.layer << "  AER " << qe::format_double(r.aer) << '\n';
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    out << csv.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate / stability / distribution

struct EvalArgs {
  std::string pred, gold, method = "xlmrscore", out;
};

int run_evaluate(const EvalArgs& a, const CLI::App& cmd) {
  std::vector<double> p, g;
  pair_by_id(qe::read_id_values(a.pred), qe::read_id_values(a.gold), p, g);
  const auto report = qe::evaluate(p, g, a.method, describe(cmd));
  std::cout << "pearson " << qe::format_double(report.pearson) << "\nn " << report.n << "\nmethod " << report.method
            << "\nconfig " << report.config_digest << "\n";
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    out << "method,n,pearson,config_digest\n"
        << report.method << ',' << report.n << ',' << qe::format_double(report.pearson) << ',' << report.config_digest
        << '\n';
  }
  return 0;
}

struct StabilityArgs {
  std::string pred, gold, out;
  std::vector<std::size_t> sizes;
  std::size_t num_seeds = 50;
  std::uint64_t seed = 0;
};

int run_stability(const StabilityArgs& a) {
  std::vector<double> p, g;
  pair_by_id(qe::read_id_values(a.pred), qe::read_id_values(a.gold), p, g);
  const auto curve = qe::size_stability(p, g, a.sizes, a.num_seeds, a.seed);
  for (std::size_t k = 0; k < curve.sizes.size(); ++k) {
    std::cout << "size " << curve.sizes[k] << "  mean r " << qe::format_double(curve.mean_r[k]) << "  std r "
              << qe::format_double(curve.std_r[k]) << "  (" << curve.valid[k] << " subsets, " << curve.skipped[k]
              << " skipped)\n";
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    qe::write_stability_csv(curve, out);
  }
  return 0;
}

struct DistributionArgs {
  std::string input, out;
  std::size_t bins = 10;
};

int run_distribution(const DistributionArgs& a) {
  std::vector<double> values;
  for (const auto& [id, v] : qe::read_id_values(a.input)) values.push_back(v);
  const auto counts = qe::score_distribution(values, a.bins);
  for (std::size_t b = 0; b < counts.size(); ++b) {
    std::cout << "[" << qe::format_double(static_cast<double>(b) / static_cast<double>(a.bins)) << ", "
              << qe::format_double(static_cast<double>(b + 1) / static_cast<double>(a.bins)) << ")  " << counts[b]
              << '\n';
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    qe::write_distribution_csv(counts, out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// export-embeddings

struct ExportArgs {
  std::string bridge, text, encoder = "xlm-roberta-base", out, vocab, unk = qe::kDefaultUnkSymbol;
  std::vector<std::string> layers;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

int run_export(const ExportArgs& a) {
  const auto layers = parse_layers(a.layers);
  std::string bridge = a.bridge;
  if (bridge.empty()) {
    const char* env = std::getenv("QE_BRIDGE");
    bridge = env ? env : "qe-bridge";
  }
  std::string layer_list;
  for (auto l : layers) layer_list += (layer_list.empty() ? "" : ",") + std::to_string(l);
  std::string command = bridge + " --text " + shell_quote(a.text) + " --encoder " + shell_quote(a.encoder) +
                        " --layers " + layer_list + " --out " + shell_quote(a.out);
  if (!a.vocab.empty()) command += " --vocab " + shell_quote(a.vocab) + " --unk-symbol " + shell_quote(a.unk);

  const int status = std::system(command.c_str());
  if (status != 0) {
    throw Error(ErrorKind::Io, "embedding bridge failed (status " + std::to_string(status) + "): " + command);
  }
  for (auto l : layers) {
    const auto path = qe::layer_path(a.out, l);
    const auto set = qe::read_embeddings(path);
    set.validate();
    if (set.manifest.layer != l) {
      throw Error(ErrorKind::ConfigLayerAbsent, path.string() + " holds layer " + std::to_string(set.manifest.layer));
    }
    std::cerr << path.string() << ": " << set.sentences.size() << " sentences, dim " << set.manifest.dim << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-free MT quality estimation with cross-lingual embeddings"};
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags take precedence");
  app.require_subcommand(1);

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Greedy-matching quality scores for a dataset");
  c_score->add_option("--dataset", score.dataset, "Dataset TSV")->required();
  c_score->add_option("--src-emb", score.src_emb, "Source embeddings (QEEMB1, may contain {layer})")->required();
  c_score->add_option("--hyp-emb", score.hyp_emb, "Hypothesis embeddings (QEEMB1, may contain {layer})")->required();
  c_score->add_option("--layer", score.layer, "Layer the embeddings must come from")->capture_default_str();
  c_score->add_option("--metric", score.metric, "p, r or f1")->check(CLI::IsMember({"p", "r", "f1"}))->capture_default_str();
  c_score->add_option("--vocab", score.vocab, "Target vocabulary; hypothesis embeddings must be unk-replaced");
  c_score->add_option("--unk-symbol", score.unk)->capture_default_str();
  c_score->add_option("--out", score.out, "id<TAB>score output (default stdout)");
  c_score->add_option("--threads", score.threads)->capture_default_str();
  c_score->add_flag("--wmt", score.wmt, "WMT column names");
  c_score->add_flag("--keep-special", score.keep_special, "Match special tokens too");
  c_score->add_flag("--lowercase", score.lowercase, "Lowercasing tokenizer policy");

  VocabArgs vocab;
  auto* c_vocab = app.add_subcommand("build-vocab", "Count words of a monolingual corpus");
  c_vocab->add_option("--corpus", vocab.corpus)->required();
  c_vocab->add_option("--min-count", vocab.min_count, "Threshold")->capture_default_str();
  c_vocab->add_option("--cmp", vocab.cmp, "gt: count > threshold, ge: count >= threshold")
      ->check(CLI::IsMember({"gt", "ge"}))
      ->capture_default_str();
  c_vocab->add_option("--out", vocab.out)->required();
  c_vocab->add_option("--threads", vocab.threads)->capture_default_str();
  c_vocab->add_flag("--lowercase", vocab.lowercase);

  ReplaceArgs replace;
  auto* c_replace = app.add_subcommand("replace-unk", "Replace out-of-vocabulary hypothesis words");
  c_replace->add_option("--dataset", replace.dataset)->required();
  c_replace->add_option("--vocab", replace.vocab)->required();
  c_replace->add_option("--out", replace.out)->required();
  c_replace->add_option("--unk-symbol", replace.unk)->capture_default_str();
  c_replace->add_flag("--wmt", replace.wmt);
  c_replace->add_flag("--lowercase", replace.lowercase);

  TerArgs ter;
  auto* c_ter = app.add_subcommand("ter", "HTER of hypotheses against their post-edits");
  c_ter->add_option("--dataset", ter.dataset)->required();
  c_ter->add_option("--out", ter.out, "id<TAB>hter output (default stdout)");
  c_ter->add_flag("--case-sensitive", ter.case_sensitive);
  c_ter->add_option("--max-shift-distance", ter.max_shift_distance)->capture_default_str();
  c_ter->add_option("--max-shift-length", ter.max_shift_length)->capture_default_str();
  c_ter->add_flag("--wmt", ter.wmt);
  c_ter->add_flag("--lowercase", ter.lowercase, "Lowercase while tokenizing");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-align", "Contrastive alignment training of the toy encoder");
  c_train->add_option("--corpus", train.corpus, "source<TAB>target per line, whitespace-tokenized")->required();
  c_train->add_option("--alignments", train.alignments, "Pharaoh file; give two to intersect")->required();
  c_train->add_option("--steps", train.steps)->capture_default_str();
  c_train->add_option("--lr", train.lr)->capture_default_str();
  c_train->add_option("--batch", train.batch)->capture_default_str();
  c_train->add_option("--temperature", train.temperature)->capture_default_str();
  c_train->add_option("--lambda", train.lambda)->capture_default_str();
  c_train->add_option("--seed", train.seed)->capture_default_str();
  c_train->add_option("--dim", train.dim)->capture_default_str();
  c_train->add_option("--init-scale", train.init_scale, "Std of the random embedding table")->capture_default_str();
  c_train->add_option("--init-checkpoint", train.init_checkpoint, "Start from a checkpoint instead");
  c_train->add_option("--negatives", train.negatives, "pairs or sentence")
      ->check(CLI::IsMember({"pairs", "sentence"}))
      ->capture_default_str();
  c_train->add_option("--threads", train.threads)->capture_default_str();
  c_train->add_option("--checkpoint-out", train.checkpoint_out);
  c_train->add_option("--history-out", train.history_out);

  EncodeArgs encode;
  auto* c_encode = app.add_subcommand("encode", "Write QEEMB1 embeddings with a toy-encoder checkpoint");
  c_encode->add_option("--checkpoint", encode.checkpoint)->required();
  c_encode->add_option("--text", encode.text, "One sentence per line; ids are line numbers from 0");
  c_encode->add_option("--dataset", encode.dataset, "Dataset TSV; ids come from the id column");
  c_encode->add_option("--side", encode.side)->check(CLI::IsMember({"source", "hypothesis", "post_edit"}))->capture_default_str();
  c_encode->add_option("--vocab", encode.vocab, "Unk-replace words before encoding");
  c_encode->add_option("--unk-symbol", encode.unk)->capture_default_str();
  c_encode->add_option("--layer", encode.layer, "Layer number recorded in the manifest")->capture_default_str();
  c_encode->add_option("--out", encode.out)->required();
  c_encode->add_flag("--wmt", encode.wmt);
  c_encode->add_flag("--lowercase", encode.lowercase);

  ExtractArgs extract;
  auto* c_extract = app.add_subcommand("extract-align", "Word alignments from embedding similarity");
  c_extract->add_option("--src-emb", extract.src_emb)->required();
  c_extract->add_option("--tgt-emb", extract.tgt_emb)->required();
  c_extract->add_option("--policy", extract.policy)->check(CLI::IsMember({"mutual", "greedy"}))->capture_default_str();
  c_extract->add_option("--out", extract.out, "Pharaoh output (default stdout)");

  AerArgs aer;
  auto* c_aer = app.add_subcommand("aer", "Alignment error rate against gold");
  c_aer->add_option("--pred", aer.pred)->required();
  c_aer->add_option("--gold", aer.gold)->required();

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("layer-sweep", "AER of extracted alignments per layer");
  c_sweep->add_option("--src-emb", sweep.src_emb, "Path template containing {layer}")->required();
  c_sweep->add_option("--tgt-emb", sweep.tgt_emb, "Path template containing {layer}")->required();
  c_sweep->add_option("--gold", sweep.gold)->required();
  c_sweep->add_option("--layers", sweep.layers, "e.g. 0,4,8,12")->required();
  c_sweep->add_option("--policy", sweep.policy)->check(CLI::IsMember({"mutual", "greedy"}))->capture_default_str();
  c_sweep->add_option("--out", sweep.out, "CSV output");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Pearson correlation of predictions with gold");
  c_eval->add_option("--pred", eval.pred, "id<TAB>value file")->required();
  c_eval->add_option("--gold", eval.gold, "id<TAB>value file or dataset TSV with gold_score")->required();
  c_eval->add_option("--method", eval.method)->capture_default_str();
  c_eval->add_option("--out", eval.out, "CSV output");

  StabilityArgs stab;
  auto* c_stab = app.add_subcommand("stability", "Pearson spread over random subsets per size");
  c_stab->add_option("--pred", stab.pred)->required();
  c_stab->add_option("--gold", stab.gold)->required();
  c_stab->add_option("--sizes", stab.sizes)->required()->delimiter(',');
  c_stab->add_option("--num-seeds", stab.num_seeds)->capture_default_str();
  c_stab->add_option("--seed", stab.seed)->capture_default_str();
  c_stab->add_option("--out", stab.out, "CSV output");

  DistributionArgs dist;
  auto* c_dist = app.add_subcommand("distribution", "Histogram of scores over [0, 1]");
  c_dist->add_option("--input", dist.input, "id<TAB>value file or dataset TSV with gold_score")->required();
  c_dist->add_option("--bins", dist.bins)->capture_default_str();
  c_dist->add_option("--out", dist.out, "CSV output");

  ExportArgs exp;
  auto* c_export = app.add_subcommand("export-embeddings", "Run the encoder bridge and check its output");
  c_export->add_option("--bridge", exp.bridge, "Bridge command (default $QE_BRIDGE or qe-bridge)");
  c_export->add_option("--text", exp.text, "One sentence per line")->required();
  c_export->add_option("--encoder", exp.encoder)->capture_default_str();
  c_export->add_option("--layers", exp.layers)->required();
  c_export->add_option("--out", exp.out, "Output path template containing {layer}")->required();
  c_export->add_option("--vocab", exp.vocab);
  c_export->add_option("--unk-symbol", exp.unk)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*c_score) return run_score(score, *c_score);
    if (*c_vocab) return run_build_vocab(vocab);
    if (*c_replace) return run_replace_unk(replace);
    if (*c_ter) return run_ter(ter);
    if (*c_train) return run_train_align(train, *c_train);
    if (*c_encode) return run_encode(encode);
    if (*c_extract) return run_extract(extract);
    if (*c_aer) return run_aer(aer);
    if (*c_sweep) return run_layer_sweep(sweep);
    if (*c_eval) return run_evaluate(eval, *c_eval);
    if (*c_stab) return run_stability(stab);
    if (*c_dist) return run_distribution(dist);
    if (*c_export) return run_export(exp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qe::is_numerical(e.kind()) ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
