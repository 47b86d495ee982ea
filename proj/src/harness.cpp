#include "qe/harness.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "qe/data_io.hpp"
#include "qe/error.hpp"
#include "qe/rng.hpp"
#include "qe/text.hpp"

namespace qe {

std::string config_digest(const std::string& description) {
  unsigned char hash[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(description.data(), description.size(), hash, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::InvalidArgument, "SHA-256 failed");
  }
  std::ostringstream out;
  for (unsigned int k = 0; k < len; ++k) out << std::hex << std::setw(2) << std::setfill('0') << int{hash[k]};
  return out.str();
}

EvalReport evaluate(std::span<const double> predicted, std::span<const double> gold, std::string method,
                    const std::string& config_description) {
  EvalReport report;
  report.pearson = pearson(predicted, gold);
  report.n = predicted.size();
  report.method = std::move(method);
  report.config_digest = config_digest(config_description);
  return report;
}

StabilityCurve size_stability(std::span<const double> predicted, std::span<const double> gold,
                              const std::vector<std::size_t>& sizes, std::size_t num_seeds, std::uint64_t seed) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(predicted.size()) + " vs " + std::to_string(gold.size()));
  }
  if (num_seeds == 0) throw Error(ErrorKind::InvalidArgument, "num_seeds must be >= 1");
  StabilityCurve curve;
  curve.seeds = num_seeds;
  std::vector<double> a, b, rs;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const std::size_t size = sizes[s];
    if (size > predicted.size()) {
      throw Error(ErrorKind::SizeTooLarge, std::to_string(size) + " > " + std::to_string(predicted.size()));
    }
    if (s > 0 && size <= sizes[s - 1]) throw Error(ErrorKind::InvalidArgument, "sizes must be increasing");
    rs.clear();
    std::size_t skipped = 0;
    for (std::size_t rep = 0; rep < num_seeds; ++rep) {
      Rng rng = Rng::derived({seed, size, rep});
      const auto subset = rng.sample_indices(predicted.size(), size);
      a.clear();
      b.clear();
      for (auto k : subset) {
        a.push_back(predicted[k]);
        b.push_back(gold[k]);
      }
      try {
        rs.push_back(pearson(a, b));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroVariance && e.kind() != ErrorKind::LengthMismatch) throw;
        ++skipped;
      }
    }
    double mean = 0.0, sd = 0.0;
    if (!rs.empty()) {
      // Shifted by the first value so identical correlations give an exact mean and zero spread.
      for (double r : rs) mean += r - rs.front();
      mean = rs.front() + mean / static_cast<double>(rs.size());
      if (rs.size() > 1) {
        for (double r : rs) sd += (r - mean) * (r - mean);
        sd = std::sqrt(sd / static_cast<double>(rs.size() - 1));
      }
    } else {
      mean = sd = std::nan("");
    }
    curve.sizes.push_back(size);
    curve.mean_r.push_back(mean);
    curve.std_r.push_back(sd);
    curve.valid.push_back(rs.size());
    curve.skipped.push_back(skipped);
  }
  return curve;
}

std::vector<std::size_t> score_distribution(std::span<const double> scores, std::size_t bins) {
  if (bins == 0) throw Error(ErrorKind::InvalidArgument, "bins must be >= 1");
  std::vector<std::size_t> counts(bins, 0);
  for (double v : scores) {
    std::size_t bin = 0;
    if (v >= 1.0) {
      bin = bins - 1;
    } else if (v > 0.0) {
      bin = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    }
    ++counts[bin];
  }
  return counts;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_stability_csv(const StabilityCurve& curve, std::ostream& out) {
  out << "size,mean_r,std_r,valid,skipped\n";
  for (std::size_t k = 0; k < curve.sizes.size(); ++k) {
    out << curve.sizes[k] << ',' << format_double(curve.mean_r[k]) << ',' << format_double(curve.std_r[k]) << ','
        << curve.valid[k] << ',' << curve.skipped[k] << '\n';
  }
}

void write_distribution_csv(const std::vector<std::size_t>& counts, std::ostream& out) {
  out << "bin_low,bin_high,count\n";
  const double width = 1.0 / static_cast<double>(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out << format_double(width * static_cast<double>(k)) << ','
        << (k + 1 == counts.size() ? std::string("inf") : format_double(width * static_cast<double>(k + 1))) << ','
        << counts[k] << '\n';
  }
}

void write_id_values(std::span<const std::uint32_t> ids, std::span<const double> values, std::ostream& out) {
  if (ids.size() != values.size()) throw Error(ErrorKind::LengthMismatch, "ids vs values");
  for (std::size_t k = 0; k < ids.size(); ++k) out << ids[k] << '\t' << format_double(values[k]) << '\n';
}

std::vector<std::pair<std::uint32_t, double>> read_id_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::string first;
  std::getline(in, first);
  if (first.rfind("id\t", 0) == 0) {
    // Dataset TSV with header.
    in.clear();
    in.seekg(0);
    std::vector<std::pair<std::uint32_t, double>> out;
    for (const auto& r : parse_dataset(in)) {
      if (!r.gold_score) throw Error(ErrorKind::MissingColumn, "gold_score missing for id " + std::to_string(r.id));
      out.emplace_back(r.id, *r.gold_score);
    }
    return out;
  }
  in.clear();
  in.seekg(0);
  std::vector<std::pair<std::uint32_t, double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = text::split_whitespace(line);
    std::uint32_t id = 0;
    double v = 0.0;
    if (fields.size() != 2) throw Error(ErrorKind::RaggedRow, path + " line " + std::to_string(line_no));
    auto r1 = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), id);
    auto r2 = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), v);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != fields[1].data() + fields[1].size()) {
      throw Error(ErrorKind::NonNumericScore, path + " line " + std::to_string(line_no));
    }
    out.emplace_back(id, v);
  }
  return out;
}

}  // namespace qe
