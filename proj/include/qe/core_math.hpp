#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qe {

/// Dense row-major matrix. Used for token embeddings (one row per token)
/// and for similarity tables.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  /// Builds a matrix from nested rows; all rows must have equal length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Token embeddings: rows = tokens, cols = embedding dimension.
using EmbeddingMatrix = Matrix;

/// n x m table of cosines between source rows and hypothesis rows.
using SimilarityMatrix = Matrix;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Divides each row by its L2 norm. Throws ZeroRow for rows with norm < 1e-12.
EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m);

/// Pairwise cosines between the rows of x and the rows of y, clamped to [-1, 1].
SimilarityMatrix cosine_similarity_matrix(const EmbeddingMatrix& x, const EmbeddingMatrix& y);

/// Sample Pearson correlation, two-pass.
double pearson(std::span<const double> a, std::span<const double> b);

/// log(sum(exp(v))) with max shift.
double logsumexp(std::span<const double> v);

/// Arithmetic mean computed over a sorted copy, so the result does not depend
/// on the order of the input.
double order_free_mean(std::span<const double> v);

}  // namespace qe
