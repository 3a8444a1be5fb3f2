// CSR view of a row-major dense matrix. Used two ways: as the fast path for
// feature-vector scoring inside the samplers, and as a constant left operand
// in the tensor engine (citation features are ~1% dense, so the first-layer
// transform dominates runtime unless it skips zeros).

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hoga/graph.hpp"

namespace hoga {

struct SparseMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> offsets;  // rows + 1
  std::vector<std::int32_t> col;
  std::vector<double> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }

  std::span<const std::int32_t> row_cols(std::int64_t i) const {
    return {col.data() + offsets[i],
            static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }
  std::span<const double> row_vals(std::int64_t i) const {
    return {val.data() + offsets[i],
            static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }

  static SparseMatrix from_dense(const FeatureMatrix& f) {
    SparseMatrix s;
    s.rows = f.rows;
    s.cols = f.cols;
    s.offsets.assign(static_cast<std::size_t>(f.rows) + 1, 0);
    for (std::int64_t i = 0; i < f.rows; ++i) {
      for (std::int64_t j = 0; j < f.cols; ++j)
        if (f.at(i, j) != 0.0) {
          s.col.push_back(static_cast<std::int32_t>(j));
          s.val.push_back(f.at(i, j));
        }
      s.offsets[static_cast<std::size_t>(i) + 1] =
          static_cast<std::int64_t>(s.col.size());
    }
    return s;
  }
};

// Euclidean norm per row, zeros skipped (identical sum to the dense loop).
inline std::vector<double> row_norms(const SparseMatrix& s) {
  std::vector<double> norms(static_cast<std::size_t>(s.rows), 0.0);
  for (std::int64_t i = 0; i < s.rows; ++i) {
    double acc = 0.0;
    for (double v : s.row_vals(i)) acc += v * v;
    norms[static_cast<std::size_t>(i)] = std::sqrt(acc);
  }
  return norms;
}

inline double sparse_dot(const SparseMatrix& s, std::int64_t a, std::int64_t b) {
  auto ca = s.row_cols(a), cb = s.row_cols(b);
  auto va = s.row_vals(a), vb = s.row_vals(b);
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ca.size() && j < cb.size()) {
    if (ca[i] == cb[j]) {
      acc += va[i] * vb[j];
      ++i, ++j;
    } else if (ca[i] < cb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return acc;
}

// Dot of a dense vector with one sparse row.
inline double dense_sparse_dot(std::span<const double> dense,
                               const SparseMatrix& s, std::int64_t row) {
  auto cs = s.row_cols(row);
  auto vs = s.row_vals(row);
  double acc = 0.0;
  for (std::size_t i = 0; i < cs.size(); ++i)
    acc += dense[static_cast<std::size_t>(cs[i])] * vs[i];
  return acc;
}

}  // namespace hoga
