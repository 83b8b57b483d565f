#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace sclifd {

/// Dense row-major matrix of doubles; rows are samples throughout.
struct Matrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : n_rows(rows), n_cols(cols), data(rows * cols, value) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }

  double* row(std::size_t r) { return data.data() + r * n_cols; }
  const double* row(std::size_t r) const { return data.data() + r * n_cols; }

  bool same_shape(const Matrix& o) const { return n_rows == o.n_rows && n_cols == o.n_cols; }
};

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const double* a, std::size_t n) { return std::sqrt(dot(a, a, n)); }

inline double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace sclifd
