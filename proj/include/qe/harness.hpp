#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qe/scorer.hpp"

namespace qe {

struct EvalReport {
  double pearson = 0.0;
  std::size_t n = 0;
  std::string method;
  std::string config_digest;
};

/// SHA-256 (hex) of a configuration description.
std::string config_digest(const std::string& description);

/// Signed Pearson correlation of predictions against gold labels. HTER-style
/// labels (lower is better) give negative values for a good metric.
EvalReport evaluate(std::span<const double> predicted, std::span<const double> gold, std::string method = {},
                    const std::string& config_description = {});

struct StabilityCurve {
  std::vector<std::size_t> sizes;
  std::vector<double> mean_r;
  std::vector<double> std_r;
  std::vector<std::size_t> valid;    // subsets that produced a correlation
  std::vector<std::size_t> skipped;  // subsets with a constant series
  std::size_t seeds = 0;
};

/// Pearson over `num_seeds` random subsets (without replacement) per size.
/// Every (size, repetition) draws from its own RNG stream derived from
/// `seed`; subset members are visited in dataset order, so the full-size
/// subset reproduces the full-data correlation bit for bit.
StabilityCurve size_stability(std::span<const double> predicted, std::span<const double> gold,
                              const std::vector<std::size_t>& sizes, std::size_t num_seeds, std::uint64_t seed);

/// Equal-width bins over [0, 1]; values above 1 land in the top bin and
/// values below 0 in the first.
std::vector<std::size_t> score_distribution(std::span<const double> scores, std::size_t bins);

void write_stability_csv(const StabilityCurve& curve, std::ostream& out);
void write_distribution_csv(const std::vector<std::size_t>& counts, std::ostream& out);

/// Shortest round-trip text form of a double.
std::string format_double(double v);

/// "id<TAB>value" lines, in order.
void write_id_values(std::span<const std::uint32_t> ids, std::span<const double> values, std::ostream& out);

/// Reads "id<TAB>value" lines, or a dataset TSV with a gold_score column.
std::vector<std::pair<std::uint32_t, double>> read_id_values(const std::string& path);

}  // namespace qe
