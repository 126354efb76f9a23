// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#include "neuvec/linalg.hpp"

#include <cmath>
#include <string>

#include "neuvec/errors.hpp"

namespace neuvec {

double RngState::normal() noexcept {
  // u1 in (0, 1] keeps the log finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

RngState RngState::split(std::uint64_t tag) const noexcept {
  // Mix the tag through one splitmix round of a tag-offset stream.
  RngState mixer(seed_ ^ 0xA5A5A5A55A5A5A5AULL, tag);
  return RngState(mixer.next_u64());
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SymMatrix::SymMatrix(Matrix full) : full_(std::move(full)) {
  if (full_.rows != full_.cols || full_.rows == 0) throw DimensionMismatch("SymMatrix requires square n>=1");
  double scale = 0.0;
  for (double v : full_.data) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) scale = 1.0;
  for (std::size_t i = 0; i < full_.rows; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::fabs(full_(i, j) - full_(j, i)) > 1e-12 * scale)
        throw DimensionMismatch("matrix not symmetric within 1e-12 relative");
}

SymMatrix SymMatrix::from_lower(std::size_t n, const std::vector<double>& lower) {
  Matrix full(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      full(i, j) = lower[i * n + j];
      full(j, i) = lower[i * n + j];
    }
  return SymMatrix(std::move(full));
}

LowerCholesky::LowerCholesky(std::size_t n, std::vector<double> lower) : n_(n), data_(std::move(lower)) {
  if (data_.size() != n_ * n_) throw DimensionMismatch("LowerCholesky storage size");
  for (std::size_t i = 0; i < n_; ++i)
    if (!((*this)(i, i) > 0.0)) throw NotPositiveDefinite("nonpositive diagonal in Cholesky factor");
}

Matrix LowerCholesky::reconstruct() const {
  Matrix a(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += (*this)(i, k) * (*this)(j, k);
      a(i, j) = s;
      a(j, i) = s;
    }
  return a;
}

LowerCholesky cholesky(const SymMatrix& a) {
  const std::size_t n = a.n();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  const double tol = 1e-12 * max_diag;

  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (d <= tol) throw NotPositiveDefinite("pivot " + std::to_string(j) + " <= tolerance");
    const double ljj = std::sqrt(d);
    l[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / ljj;
    }
  }
  return LowerCholesky(n, std::move(l));
}

std::vector<double> solve_triangular(const LowerCholesky& l, std::span<const double> b, TriSide side) {
  const std::size_t n = l.n();
  if (b.size() != n) throw DimensionMismatch("solve_triangular rhs length");
  std::vector<double> x(n);
  if (side == TriSide::Lower) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
      x[i] = s / l(i, i);
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
      x[ii] = s / l(ii, ii);
    }
  }
  return x;
}

std::vector<double> sample_mvn(std::span<const double> mean, const LowerCholesky& chol, RngState& rng) {
  const std::size_t n = chol.n();
  if (mean.size() != n) throw DimensionMismatch("sample_mvn mean length");
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = mean[i];
    for (std::size_t k = 0; k <= i; ++k) s += chol(i, k) * z[k];
    x[i] = s;
  }
  return x;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimensionMismatch("matmul inner dimensions");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* ci = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      const double* bk = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace neuvec
