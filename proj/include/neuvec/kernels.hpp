// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_KERNELS_HPP
#define NEUVEC_KERNELS_HPP

#include <span>
#include <string>
#include <vector>

#include "neuvec/linalg.hpp"

namespace neuvec {

enum class KernelFamily { MT15, RangeNS, Periodic, DTMT15, SpectralMixture };

KernelFamily kernel_family_from_name(const std::string& name);
std::string kernel_family_name(KernelFamily family);

/// The Lo-Shu 3x3 magic square used by the domain-transformed Matern kernel.
/// Only d = 3 is supported; other dimensions throw UnsupportedDimension.
Matrix magic_square(int d);

/// Declarative covariance kernel description.
///
/// Parameter usage by family:
///   MT15            sigma, ell (per dimension), nu (= 1.5), tau2
///   RangeNS         sigma, beta0, beta1, beta2, tau2
///   Periodic        sigma, ell (single scalar), period, tau2
///   DTMT15          sigma, ell (single scalar), nu, tau2, transform A
///   SpectralMixture sm_log_weights (Q), sm_means (Q x d), sm_log_variances (Q x d), tau2
struct KernelSpec {
  KernelFamily family = KernelFamily::MT15;
  int d = 3;

  double sigma = 1.0;
  double tau2 = 0.01;
  double nu = 1.5;
  std::vector<double> ell;  // length d for MT15, length 1 for Periodic/DTMT15
  double period = 0.5;
  double beta0 = -2.0, beta1 = 1.0, beta2 = -1.0;
  Matrix transform;  // DTMT15 only, d x d

  std::vector<double> sm_log_weights;
  std::vector<double> sm_means;          // row-major Q x d
  std::vector<double> sm_log_variances;  // row-major Q x d
  int sm_components() const { return static_cast<int>(sm_log_weights.size()); }

  void validate() const;

  // Defaults used for data simulation.
  static KernelSpec mt15(int d = 3);
  static KernelSpec range_ns(int d = 3);
  static KernelSpec periodic(int d = 3);
  static KernelSpec dtmt15(int d = 3);
  /// Spectral mixture with q components: equal weights, unit variances and
  /// component means drawn uniformly from [0, 5] using the given rng.
  static KernelSpec spectral_mixture(int d, int q, RngState& rng);

  /// Named simulation scenario ("MT15", "RangeNS", "Periodic", "DTMT15",
  /// "SM"); the seed only matters for SM's component means.
  static KernelSpec scenario(const std::string& name, int d, std::uint64_t seed);
};

/// Input locations: n points in R^d, row-major.
struct LocationSet {
  int n = 0;
  int d = 0;
  std::vector<double> coords;

  LocationSet() = default;
  LocationSet(int n_, int d_) : n(n_), d(d_), coords(static_cast<std::size_t>(n_) * d_, 0.0) {}

  std::span<const double> point(int i) const { return {coords.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)}; }
  double* point_ptr(int i) { return coords.data() + static_cast<std::size_t>(i) * d; }
};

/// K(x_i, x_j). The nugget tau2 is added only when same_index is true: it is
/// attached to index equality, not coordinate equality.
double kernel_eval(const KernelSpec& spec, std::span<const double> xi, std::span<const double> xj, bool same_index);

/// n x n covariance over a location set, nugget on the diagonal.
SymMatrix covariance_matrix(const KernelSpec& spec, const LocationSet& locs);

/// Matern correlation with smoothness 1.5: (1 + sqrt(3) h) exp(-sqrt(3) h).
double matern15(double h);

}  // namespace neuvec

#endif
