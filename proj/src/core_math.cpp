#include "qe/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qe/error.hpp"

namespace qe {

namespace {
constexpr double kZeroNorm = 1e-12;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorKind::DimMismatch, "matrix buffer has " + std::to_string(values_.size()) +
                                            " values, expected " + std::to_string(rows_ * cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw Error(ErrorKind::DimMismatch, "row " + std::to_string(r) + " has " +
                                              std::to_string(rows[r].size()) + " columns, expected " +
                                              std::to_string(cols));
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m) {
  EmbeddingMatrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double norm = l2_norm(row);
    if (!(norm >= kZeroNorm)) {
      throw Error(ErrorKind::ZeroRow, "row " + std::to_string(r) + " has norm " + std::to_string(norm));
    }
    for (double& v : row) v /= norm;
  }
  return out;
}

SimilarityMatrix cosine_similarity_matrix(const EmbeddingMatrix& x, const EmbeddingMatrix& y) {
  if (x.cols() != y.cols()) {
    throw Error(ErrorKind::DimMismatch,
                "dim " + std::to_string(x.cols()) + " vs " + std::to_string(y.cols()));
  }
  const EmbeddingMatrix xn = l2_normalize_rows(x);
  const EmbeddingMatrix yn = l2_normalize_rows(y);
  SimilarityMatrix sim(xn.rows(), yn.rows());
  for (std::size_t i = 0; i < xn.rows(); ++i) {
    for (std::size_t j = 0; j < yn.rows(); ++j) {
      sim(i, j) = std::clamp(dot(xn.row(i), yn.row(j)), -1.0, 1.0);
    }
  }
  return sim;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " values");
  }
  if (a.size() < 2) {
    throw Error(ErrorKind::LengthMismatch, "pearson needs at least 2 values");
  }
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    mean_a += a[k];
    mean_b += b[k];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - mean_a;
    const double db = b[k] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    throw Error(ErrorKind::ZeroVariance, "constant series");
  }
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

double logsumexp(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::EmptyInput, "logsumexp of empty list");
  const double hi = *std::max_element(v.begin(), v.end());
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double order_free_mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::EmptyInput, "mean of empty list");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (double x : sorted) acc += x;
  return acc / static_cast<double>(sorted.size());
}

}  // namespace qe
