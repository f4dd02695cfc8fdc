#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "spiral/random.hpp"
#include "spiral/types.hpp"

namespace spiral {

struct MatrixEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  friend bool operator==(const MatrixEntry &, const MatrixEntry &) = default;
};

/// Nonnegative N x m operator stored row-compressed. Every stored value is
/// strictly positive; products are computed in a fixed order so results are
/// reproducible bit-for-bit.
class SensingMatrix {
 public:
  SensingMatrix() = default;

  /// `k` is the per-row nonzero count when uniform, 0 otherwise; `seed` is
  /// informational (written to the text header).
  SensingMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<MatrixEntry> entries,
                std::size_t k = 0, std::uint64_t seed = 0)
      : n_rows_(n_rows), n_cols_(n_cols), k_(k), seed_(seed) {
    if (n_rows == 0 || n_cols == 0) fail("SensingMatrix: empty shape ", n_rows, "x", n_cols);
    std::stable_sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_start_.assign(n_rows + 1, 0);
    cols_.reserve(entries.size());
    vals_.reserve(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto &t = entries[e];
      if (t.row >= n_rows || t.col >= n_cols)
        fail("SensingMatrix: entry (", t.row, ",", t.col, ") out of bounds");
      if (!(t.value > 0.0) || !std::isfinite(t.value))
        fail("SensingMatrix: entry (", t.row, ",", t.col, ") has non-positive value ", t.value);
      if (e > 0 && entries[e - 1].row == t.row && entries[e - 1].col == t.col)
        fail("SensingMatrix: duplicate entry (", t.row, ",", t.col, ")");
      ++row_start_[t.row + 1];
      cols_.push_back(t.col);
      vals_.push_back(t.value);
    }
    std::partial_sum(row_start_.begin(), row_start_.end(), row_start_.begin());
    if (k_ != 0) {
      for (std::size_t i = 0; i < n_rows; ++i)
        if (row_nnz(i) != k_) fail("SensingMatrix: row ", i, " has ", row_nnz(i), " nonzeros, expected ", k_);
    }
  }

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return n_cols_; }
  std::size_t nonzeros_per_row() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t nnz() const noexcept { return vals_.size(); }
  std::size_t row_nnz(std::size_t i) const { return row_start_[i + 1] - row_start_[i]; }

  std::vector<MatrixEntry> entries() const {
    std::vector<MatrixEntry> out;
    out.reserve(nnz());
    for (std::size_t i = 0; i < n_rows_; ++i)
      for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p)
        out.push_back({i, cols_[p], vals_[p]});
    return out;
  }

  /// A x
  std::vector<double> apply(std::span<const double> x) const {
    require_same_size(x.size(), n_cols_, "SensingMatrix::apply");
    std::vector<double> out(n_rows_, 0.0);
    for (std::size_t i = 0; i < n_rows_; ++i) {
      double acc = 0.0;
      for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p) acc += vals_[p] * x[cols_[p]];
      out[i] = acc;
    }
    return out;
  }

  /// A^T x
  std::vector<double> apply_transpose(std::span<const double> x) const {
    require_same_size(x.size(), n_rows_, "SensingMatrix::apply_transpose");
    std::vector<double> out(n_cols_, 0.0);
    for (std::size_t i = 0; i < n_rows_; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p) out[cols_[p]] += vals_[p] * xi;
    }
    return out;
  }

  /// A^T 1
  std::vector<double> column_sums() const {
    std::vector<double> out(n_cols_, 0.0);
    for (std::size_t p = 0; p < vals_.size(); ++p) out[cols_[p]] += vals_[p];
    return out;
  }

  friend bool operator==(const SensingMatrix &, const SensingMatrix &) = default;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::size_t k_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

/// Random binary sensing matrix: each row holds exactly k ones at columns
/// drawn uniformly without replacement (partial Fisher-Yates).
inline SensingMatrix generate_sensing_matrix(std::size_t n_rows, std::size_t n_cols,
                                             std::size_t k, std::uint64_t seed) {
  if (n_rows == 0 || n_cols == 0) fail("generate_sensing_matrix: N and m must be positive");
  if (k == 0 || k > n_cols) fail("generate_sensing_matrix: need 0 < k <= m (k=", k, ", m=", n_cols, ")");
  Rng rng(derive_seed(seed, "sensing-matrix"));
  std::vector<std::size_t> pool(n_cols);
  std::vector<MatrixEntry> entries;
  entries.reserve(n_rows * k);
  for (std::size_t i = 0; i < n_rows; ++i) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t pick = t + static_cast<std::size_t>(rng.bounded(n_cols - t));
      std::swap(pool[t], pool[pick]);
      entries.push_back({i, pool[t], 1.0});
    }
  }
  return SensingMatrix(n_rows, n_cols, std::move(entries), k, seed);
}

}  // namespace spiral
