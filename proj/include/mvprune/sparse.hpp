#pragma once

#include <cstddef>
#include <vector>

#include "mvprune/tensor.hpp"

namespace mvprune {

/// Compressed sparse row matrix used for message passing over edge lists.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // size rows + 1
  std::vector<std::size_t> col_idx;
  std::vector<double> weights;

  static SparseMatrix from_dense(const Tensor& m) {
    SparseMatrix s;
    s.rows = m.rows();
    s.cols = m.cols();
    s.row_ptr.assign(s.rows + 1, 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (m(i, j) != 0.0) {
          s.col_idx.push_back(j);
          s.weights.push_back(m(i, j));
        }
      }
      s.row_ptr[i + 1] = s.col_idx.size();
    }
    return s;
  }

  std::size_t nnz() const noexcept { return weights.size(); }

  Tensor to_dense() const {
    Tensor out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) out(i, col_idx[p]) = weights[p];
    return out;
  }

  /// this · x
  Tensor multiply(const Tensor& x) const {
    if (x.rows() != cols) throw ShapeError("SparseMatrix::multiply: dimension mismatch");
    Tensor out(rows, x.cols());
    const std::size_t m = x.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      auto orow = out.row(i);
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        const double w = weights[p];
        auto xrow = x.row(col_idx[p]);
        for (std::size_t j = 0; j < m; ++j) orow[j] += w * xrow[j];
      }
    }
    return out;
  }

  /// thisᵀ · x
  Tensor multiply_transposed(const Tensor& x) const {
    if (x.rows() != rows) throw ShapeError("SparseMatrix::multiply_transposed: dimension mismatch");
    Tensor out(cols, x.cols());
    const std::size_t m = x.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      auto xrow = x.row(i);
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        const double w = weights[p];
        auto orow = out.row(col_idx[p]);
        for (std::size_t j = 0; j < m; ++j) orow[j] += w * xrow[j];
      }
    }
    return out;
  }
};

}  // namespace mvprune
