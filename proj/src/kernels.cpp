// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#include "neuvec/kernels.hpp"

#include <cmath>

#include "neuvec/errors.hpp"

namespace neuvec {

KernelFamily kernel_family_from_name(const std::string& name) {
  if (name == "MT15") return KernelFamily::MT15;
  if (name == "RangeNS") return KernelFamily::RangeNS;
  if (name == "Periodic") return KernelFamily::Periodic;
  if (name == "DTMT15") return KernelFamily::DTMT15;
  if (name == "SM" || name == "SpectralMixture") return KernelFamily::SpectralMixture;
  throw UnknownFamily(name);
}

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::MT15: return "MT15";
    case KernelFamily::RangeNS: return "RangeNS";
    case KernelFamily::Periodic: return "Periodic";
    case KernelFamily::DTMT15: return "DTMT15";
    case KernelFamily::SpectralMixture: return "SM";
  }
  throw UnknownFamily("unrecognized enum value");
}

Matrix magic_square(int d) {
  if (d != 3) throw UnsupportedDimension("magic_square supports d=3 only, got " + std::to_string(d));
  Matrix a(3, 3);
  const double v[9] = {8, 1, 6, 3, 5, 7, 4, 9, 2};
  for (int i = 0; i < 9; ++i) a.data[i] = v[i];
  return a;
}

double matern15(double h) {
  const double s = std::sqrt(3.0) * h;
  return (1.0 + s) * std::exp(-s);
}

void KernelSpec::validate() const {
  if (d < 1) throw DimensionMismatch("kernel d >= 1 required");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (!(tau2 >= 0.0)) throw ConfigError("tau2 must be >= 0");
  switch (family) {
    case KernelFamily::MT15:
      if (static_cast<int>(ell.size()) != d) throw ConfigError("MT15 needs one lengthscale per dimension");
      break;
    case KernelFamily::Periodic:
      if (ell.size() != 1) throw ConfigError("Periodic needs a single lengthscale");
      if (!(period > 0.0)) throw ConfigError("period must be > 0");
      break;
    case KernelFamily::DTMT15:
      if (ell.size() != 1) throw ConfigError("DTMT15 needs a single lengthscale");
      if (transform.rows != static_cast<std::size_t>(d) || transform.cols != static_cast<std::size_t>(d))
        throw ConfigError("DTMT15 transform must be d x d");
      break;
    case KernelFamily::RangeNS:
      break;
    case KernelFamily::SpectralMixture: {
      const std::size_t q = sm_log_weights.size();
      if (q == 0) throw ConfigError("SpectralMixture needs at least one component");
      if (sm_means.size() != q * d || sm_log_variances.size() != q * d)
        throw ConfigError("SpectralMixture means/variances must be Q x d");
      break;
    }
  }
  for (double l : ell)
    if (!(l > 0.0)) throw ConfigError("lengthscales must be > 0");
}

KernelSpec KernelSpec::mt15(int d) {
  KernelSpec s;
  s.family = KernelFamily::MT15;
  s.d = d;
  s.ell.assign(d, 0.3);
  return s;
}

KernelSpec KernelSpec::range_ns(int d) {
  KernelSpec s;
  s.family = KernelFamily::RangeNS;
  s.d = d;
  return s;
}

KernelSpec KernelSpec::periodic(int d) {
  KernelSpec s;
  s.family = KernelFamily::Periodic;
  s.d = d;
  s.ell = {static_cast<double>(d)};
  s.period = 0.5;
  return s;
}

KernelSpec KernelSpec::dtmt15(int d) {
  KernelSpec s;
  s.family = KernelFamily::DTMT15;
  s.d = d;
  s.ell = {std::sqrt(static_cast<double>(d)) / 10.0};
  s.transform = magic_square(d);
  return s;
}

KernelSpec KernelSpec::spectral_mixture(int d, int q, RngState& rng) {
  KernelSpec s;
  s.family = KernelFamily::SpectralMixture;
  s.d = d;
  s.sm_log_weights.assign(q, std::log(1.0 / q));
  s.sm_means.resize(static_cast<std::size_t>(q) * d);
  for (double& m : s.sm_means) m = rng.uniform(0.0, 5.0);
  s.sm_log_variances.assign(static_cast<std::size_t>(q) * d, 0.0);
  return s;
}

KernelSpec KernelSpec::scenario(const std::string& name, int d, std::uint64_t seed) {
  switch (kernel_family_from_name(name)) {
    case KernelFamily::MT15: return mt15(d);
    case KernelFamily::RangeNS: return range_ns(d);
    case KernelFamily::Periodic: return periodic(d);
    case KernelFamily::DTMT15: return dtmt15(d);
    case KernelFamily::SpectralMixture: {
      RngState rng(seed);
      RngState sm = rng.split(0x534D);
      return spectral_mixture(d, 6, sm);
    }
  }
  throw UnknownFamily(name);
}

namespace {

double sq_norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) {
    const double t = a[q] - b[q];
    s += t * t;
  }
  return s;
}

// RangeNS lengthscale field ell(x) = exp(b0 + b1 sin(3 pi s) + b2 cos(2 pi s)), s = 1'x.
double range_ns_ell(const KernelSpec& k, std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return std::exp(k.beta0 + k.beta1 * std::sin(3.0 * M_PI * s) + k.beta2 * std::cos(2.0 * M_PI * s));
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> xi, std::span<const double> xj, bool same_index) {
  if (static_cast<int>(xi.size()) != spec.d || static_cast<int>(xj.size()) != spec.d)
    throw DimensionMismatch("kernel_eval point dimension");
  const double nugget = same_index ? spec.tau2 : 0.0;
  const double s2 = spec.sigma * spec.sigma;

  switch (spec.family) {
    case KernelFamily::MT15: {
      double h2 = 0.0;
      for (int q = 0; q < spec.d; ++q) {
        const double t = (xi[q] - xj[q]) / spec.ell[q];
        h2 += t * t;
      }
      return s2 * matern15(std::sqrt(h2)) + nugget;
    }
    case KernelFamily::RangeNS: {
      const double li = range_ns_ell(spec, xi);
      const double lj = range_ns_ell(spec, xj);
      const double avg = 0.5 * (li + lj);
      const double c = std::pow(std::pow(li, 0.25) * std::pow(lj, 0.25) / std::sqrt(avg), spec.d);
      const double h = std::sqrt(sq_norm(xi, xj)) / std::sqrt(avg);
      return s2 * c * std::exp(-h) + nugget;
    }
    case KernelFamily::Periodic: {
      double e = 0.0;
      for (int q = 0; q < spec.d; ++q) {
        const double s = std::sin(M_PI * (xi[q] - xj[q]) / spec.period);
        e += s * s;
      }
      return s2 * std::exp(-2.0 / spec.ell[0] * e) + nugget;
    }
    case KernelFamily::DTMT15: {
      // || A xi - A xj || = || A (xi - xj) ||
      double h2 = 0.0;
      for (int r = 0; r < spec.d; ++r) {
        double t = 0.0;
        for (int q = 0; q < spec.d; ++q) t += spec.transform(r, q) * (xi[q] - xj[q]);
        h2 += t * t;
      }
      return s2 * matern15(std::sqrt(h2) / spec.ell[0]) + nugget;
    }
    case KernelFamily::SpectralMixture: {
      const int q_count = spec.sm_components();
      double k = 0.0;
      for (int q = 0; q < q_count; ++q) {
        double term = std::exp(spec.sm_log_weights[q]);
        for (int p = 0; p < spec.d; ++p) {
          const double tau = xi[p] - xj[p];
          const double var = std::exp(spec.sm_log_variances[q * spec.d + p]);
          const double mean = spec.sm_means[q * spec.d + p];
          term *= std::exp(-2.0 * M_PI * M_PI * tau * tau * var) * std::cos(2.0 * M_PI * tau * mean);
        }
        k += term;
      }
      return k + nugget;
    }
  }
  throw UnknownFamily("unrecognized enum value");
}

SymMatrix covariance_matrix(const KernelSpec& spec, const LocationSet& locs) {
  if (locs.d != spec.d) throw DimensionMismatch("covariance_matrix location dimension");
  Matrix full(locs.n, locs.n);
  for (int i = 0; i < locs.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = kernel_eval(spec, locs.point(i), locs.point(j), i == j);
      full(i, j) = v;
      full(j, i) = v;
    }
  }
  return SymMatrix(std::move(full));
}

}  // namespace neuvec
