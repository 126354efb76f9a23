// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_LINALG_HPP
#define NEUVEC_LINALG_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "neuvec/rng.hpp"

namespace neuvec {

/// Dense row-major matrix of doubles. All numeric state in the library is
/// 64-bit float.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double* row_ptr(std::size_t i) { return data.data() + i * cols; }
  const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }
  std::span<const double> row(std::size_t i) const { return {row_ptr(i), cols}; }

  static Matrix identity(std::size_t n);
};

/// Symmetric matrix. Construction validates symmetry (1e-12 relative) and
/// n >= 1; storage is the full square for simple indexing.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix full);
  /// Builds from a generator over the lower triangle, mirroring the rest.
  static SymMatrix from_lower(std::size_t n, const std::vector<double>& lower_full_rowmajor);

  std::size_t n() const noexcept { return full_.rows; }
  double operator()(std::size_t i, std::size_t j) const { return full_(i, j); }
  const Matrix& full() const noexcept { return full_; }

 private:
  Matrix full_;
};

/// Lower-triangular Cholesky factor with strictly positive diagonal.
class LowerCholesky {
 public:
  LowerCholesky(std::size_t n, std::vector<double> lower_rowmajor);

  std::size_t n() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  const std::vector<double>& entries() const noexcept { return data_; }

  /// L * L^T, for reconstruction checks.
  Matrix reconstruct() const;

 private:
  std::size_t n_;
  std::vector<double> data_;
};

enum class TriSide { Lower, Upper };

/// Cholesky factorization A = L L^T. Throws NotPositiveDefinite when a pivot
/// falls at or below 1e-12 times the largest diagonal entry.
LowerCholesky cholesky(const SymMatrix& a);

/// Solves L x = b (Lower) or L^T x = b (Upper) by substitution.
std::vector<double> solve_triangular(const LowerCholesky& l, std::span<const double> b, TriSide side);

/// mean + L z with z i.i.d. standard normal drawn from rng.
std::vector<double> sample_mvn(std::span<const double> mean, const LowerCholesky& chol, RngState& rng);

// Small dense helpers shared across modules.
Matrix matmul(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace neuvec

#endif
