// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sgrec/kernels.hpp"

namespace sgrec {

using Vec = std::vector<double>;

/// Row-major dense matrix of doubles.
struct Mat {
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  std::size_t rows_ = 0, cols_ = 0;
  Vec data_;
};

/// out = A x  (A: m x n, x: n, out: m)
inline void matvec(const Mat& a, const double* x, double* out) {
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = kernels::dot(a.row(r), x, a.cols());
}

/// out += A' y  (A: m x n, y: m, out: n) — row-wise axpy keeps access contiguous.
inline void matvec_transpose_accum(const Mat& a, const double* y, double* out) {
  for (std::size_t r = 0; r < a.rows(); ++r) kernels::axpy(out, y[r], a.row(r), a.cols());
}

// Numerically stable logistic pieces; x is the logit.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) without overflow in either tail.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace sgrec
