#include "qe/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "binary_io.hpp"
#include "qe/error.hpp"

namespace qe {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

DatasetFormat DatasetFormat::wmt() {
  DatasetFormat f;
  f.id = "index";
  f.source = "original";
  f.hypothesis = "translation";
  f.gold_score = "z_mean";
  return f;
}

std::vector<QERecord> parse_dataset(std::istream& in, const DatasetFormat& format) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::MissingColumn, "empty dataset, no header");
  strip_cr(line);
  const auto header = split_tabs(line);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = column(format.id);
  const auto src_col = column(format.source);
  const auto hyp_col = column(format.hypothesis);
  if (!id_col) throw Error(ErrorKind::MissingColumn, format.id);
  if (!src_col) throw Error(ErrorKind::MissingColumn, format.source);
  if (!hyp_col) throw Error(ErrorKind::MissingColumn, format.hypothesis);
  const auto pe_col = column(format.post_edit);
  const auto gold_col = column(format.gold_score);

  std::vector<QERecord> records;
  std::unordered_set<std::uint32_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::RaggedRow, where + ": " + std::to_string(fields.size()) + " fields, header has " +
                                            std::to_string(header.size()));
    }
    QERecord r;
    if (!parse_number(fields[*id_col], r.id)) {
      throw Error(ErrorKind::InvalidArgument, where + ": bad id '" + std::string(fields[*id_col]) + "'");
    }
    if (!seen.insert(r.id).second) {
      throw Error(ErrorKind::InvalidArgument, where + ": duplicate id " + std::to_string(r.id));
    }
    r.source = fields[*src_col];
    r.hypothesis = fields[*hyp_col];
    if (pe_col) r.post_edit = std::string(fields[*pe_col]);
    if (gold_col && !fields[*gold_col].empty()) {
      double v;
      if (!parse_number(fields[*gold_col], v)) {
        throw Error(ErrorKind::NonNumericScore, where + ": '" + std::string(fields[*gold_col]) + "'");
      }
      r.gold_score = v;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<QERecord> read_dataset(const std::filesystem::path& path, const DatasetFormat& format) {
  auto in = open_in(path);
  return parse_dataset(in, format);
}

void write_dataset(std::ostream& out, const std::vector<QERecord>& records) {
  const bool with_pe = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.post_edit.has_value(); });
  const bool with_gold =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return r.gold_score.has_value(); });
  out << "id\tsource\thypothesis";
  if (with_pe) out << "\tpost_edit";
  if (with_gold) out << "\tgold_score";
  out << '\n';
  char buf[64];
  for (const auto& r : records) {
    out << r.id << '\t' << r.source << '\t' << r.hypothesis;
    if (with_pe) out << '\t' << r.post_edit.value_or("");
    if (with_gold) {
      out << '\t';
      if (r.gold_score) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *r.gold_score);
        out.write(buf, ptr - buf);
      }
    }
    out << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const std::vector<QERecord>& records) {
  auto out = open_out(path);
  write_dataset(out, records);
}

// ---------------------------------------------------------------------------

std::size_t SentenceEmbedding::word_count() const {
  std::size_t count = 0;
  for (auto w : word_index) {
    if (w != kSpecialWordIndex) count = std::max<std::size_t>(count, w + 1);
  }
  return count;
}

const SentenceEmbedding* EmbeddingSet::find(std::uint32_t id) const {
  for (const auto& s : sentences) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

void EmbeddingSet::validate() const {
  for (const auto& s : sentences) {
    const std::string who = "sentence " + std::to_string(s.id);
    if (s.vectors.cols() != manifest.dim && !(s.vectors.rows() == 0)) {
      throw Error(ErrorKind::DimMismatch, who + ": dim " + std::to_string(s.vectors.cols()) + " vs manifest " +
                                              std::to_string(manifest.dim));
    }
    if (s.tokens.size() != s.vectors.rows() || s.word_index.size() != s.vectors.rows()) {
      throw Error(ErrorKind::EmbeddingMismatch, who + ": token, word map and row counts differ");
    }
    std::uint32_t expected_min = 0;
    bool first = true;
    for (auto w : s.word_index) {
      if (w == kSpecialWordIndex) continue;
      if (first ? w != 0 : (w < expected_min || w > expected_min + 1)) {
        throw Error(ErrorKind::EmbeddingMismatch, who + ": word indices must start at 0 and never decrease or skip");
      }
      expected_min = w;
      first = false;
    }
  }
}

using detail::put_string;
using detail::put_u32;
using detail::Reader;

void write_embeddings(const EmbeddingSet& set, std::ostream& out) {
  set.validate();
  nlohmann::json header = set.manifest.extra;
  header["layer"] = set.manifest.layer;
  header["dim"] = set.manifest.dim;
  header["sentences"] = set.sentences.size();
  header["encoder"] = set.manifest.encoder;
  out.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  put_string(out, header.dump());
  for (const auto& s : set.sentences) {
    const auto n = static_cast<std::uint32_t>(s.vectors.rows());
    put_u32(out, s.id);
    put_u32(out, n);
    put_u32(out, set.manifest.dim);
    for (const auto& t : s.tokens) put_string(out, t);
    for (auto w : s.word_index) put_u32(out, w);
    for (double v : s.vectors.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw Error(ErrorKind::Io, "write failed");
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary);
  write_embeddings(set, out);
}

EmbeddingSet read_embeddings(std::istream& in) {
  Reader reader(in);
  char magic[6] = {};
  in.read(magic, 6);
  if (in.gcount() != 6 || std::string_view(magic, 6) != kEmbeddingMagic) {
    throw Error(ErrorKind::BadMagic, "not a QEEMB1 file");
  }
  const std::string header_text = reader.string("header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad header JSON: ") + e.what());
  }
  EmbeddingSet set;
  std::uint64_t count = 0;
  try {
    set.manifest.layer = header.at("layer").get<std::uint32_t>();
    set.manifest.dim = header.at("dim").get<std::uint32_t>();
    set.manifest.encoder = header.value("encoder", std::string());
    count = header.at("sentences").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad manifest: ") + e.what());
  }
  for (const char* key : {"layer", "dim", "encoder", "sentences"}) header.erase(key);
  set.manifest.extra = std::move(header);

  for (std::uint64_t k = 0; k < count; ++k) {
    SentenceEmbedding s;
    const std::string where = "sentence record " + std::to_string(k);
    s.id = reader.u32(where);
    const std::uint32_t n = reader.u32(where);
    const std::uint32_t dim = reader.u32(where);
    if (dim != set.manifest.dim) {
      throw Error(ErrorKind::DimMismatch, "sentence " + std::to_string(s.id) + ": dim " + std::to_string(dim) +
                                              " vs manifest " + std::to_string(set.manifest.dim));
    }
    // No up-front reserve from declared sizes: a corrupt count must end in
    // TruncatedFile, not in a huge allocation.
    for (std::uint32_t t = 0; t < n; ++t) s.tokens.push_back(reader.string(where + " tokens"));
    for (std::uint32_t t = 0; t < n; ++t) s.word_index.push_back(reader.u32(where + " word map"));
    const std::size_t total = static_cast<std::size_t>(n) * dim;
    std::vector<double> values;
    for (std::size_t v = 0; v < total; ++v) values.push_back(std::bit_cast<float>(reader.u32(where + " values")));
    s.vectors = EmbeddingMatrix(n, dim, std::move(values));
    set.sentences.push_back(std::move(s));
  }
  set.validate();
  return set;
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return read_embeddings(in);
}

std::filesystem::path layer_path(const std::string& path_template, std::uint32_t layer) {
  constexpr std::string_view placeholder = "{layer}";
  std::string out = path_template;
  for (auto pos = out.find(placeholder); pos != std::string::npos; pos = out.find(placeholder)) {
    out.replace(pos, placeholder.size(), std::to_string(layer));
  }
  return out;
}

// ---------------------------------------------------------------------------

WordAlignment parse_pharaoh(std::string_view line, bool all_sure) {
  WordAlignment a;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == '\n')) ++i;
    std::size_t j = i;
    while (j < line.size() && !(line[j] == ' ' || line[j] == '\t' || line[j] == '\r' || line[j] == '\n')) ++j;
    if (j == i) break;
    const std::string_view item = line.substr(i, j - i);
    i = j;
    const std::size_t sep = item.find_first_of("-?");
    if (sep == std::string_view::npos) throw Error(ErrorKind::BadPair, std::string(item));
    WordPair p;
    if (!parse_number(item.substr(0, sep), p.first) || !parse_number(item.substr(sep + 1), p.second)) {
      throw Error(ErrorKind::BadPair, std::string(item));
    }
    if (item[sep] == '-' || all_sure) a.sure.insert(p);
    a.possible.insert(p);
  }
  return a;
}

std::string format_pharaoh(const PairSet& pairs) {
  std::string out;
  for (const auto& [s, t] : pairs) {
    if (!out.empty()) out.push_back(' ');
    out += std::to_string(s) + "-" + std::to_string(t);
  }
  return out;
}

std::vector<WordAlignment> read_alignments(const std::filesystem::path& path, bool all_sure) {
  auto in = open_in(path);
  std::vector<WordAlignment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      out.push_back(parse_pharaoh(line, all_sure));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {
PairSet intersect(const PairSet& a, const PairSet& b) {
  PairSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}
}  // namespace

WordAlignment intersect_alignments(const WordAlignment& forward, const WordAlignment& backward) {
  return {intersect(forward.sure, backward.sure), intersect(forward.possible, backward.possible)};
}

WordAlignment swap_direction(const WordAlignment& alignment) {
  WordAlignment out;
  for (const auto& [s, t] : alignment.sure) out.sure.emplace(t, s);
  for (const auto& [s, t] : alignment.possible) out.possible.emplace(t, s);
  return out;
}

}  // namespace qe
