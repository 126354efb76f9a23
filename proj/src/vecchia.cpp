// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#include "neuvec/vecchia.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "neuvec/errors.hpp"

namespace neuvec {

void ConditioningPlan::validate() const {
  const int n = size();
  if (n == 0) throw EmptyInput("plan has no positions");
  if (static_cast<int>(neighbors.size()) != n) throw ShapeMismatch("plan neighbors size != order size");
  std::vector<char> seen(n, 0);
  for (int idx : order) {
    if (idx < 0 || idx >= n || seen[idx]) throw ShapeMismatch("order is not a permutation");
    seen[idx] = 1;
  }
  for (int k = 0; k < n; ++k) {
    const auto& c = neighbors[k];
    if (static_cast<int>(c.size()) > m) throw ShapeMismatch("conditioning set larger than m");
    if (k == 0 && !c.empty()) throw ShapeMismatch("first position must condition on nothing");
    for (std::size_t t = 0; t < c.size(); ++t) {
      if (c[t] < 0 || c[t] >= k) throw ShapeMismatch("neighbor position not earlier than target");
      if (t > 0 && c[t] <= c[t - 1]) throw ShapeMismatch("neighbor positions must be sorted, unique");
    }
  }
}

std::string ConditioningPlan::to_text() const {
  std::ostringstream out;
  for (int k = 0; k < size(); ++k) {
    out << order[k] << ":";
    for (int pos : neighbors[k]) out << ' ' << order[pos];
    out << '\n';
  }
  return out.str();
}

ConditioningPlan ConditioningPlan::from_text(const std::string& text) {
  ConditioningPlan plan;
  std::vector<int> position_of;  // original id -> position
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int orig = -1;
    char colon = 0;
    if (!(ls >> orig >> colon) || colon != ':')
      throw ParseError("plan line " + std::to_string(line_no));
    const int pos = plan.size();
    plan.order.push_back(orig);
    if (orig >= static_cast<int>(position_of.size())) position_of.resize(orig + 1, -1);
    position_of[orig] = pos;
    std::vector<int> c;
    int nb;
    while (ls >> nb) {
      if (nb >= static_cast<int>(position_of.size()) || position_of[nb] < 0)
        throw ParseError("plan line " + std::to_string(line_no) + ": neighbor before definition");
      c.push_back(position_of[nb]);
    }
    std::sort(c.begin(), c.end());
    plan.neighbors.push_back(std::move(c));
    plan.m = std::max<int>(plan.m, static_cast<int>(plan.neighbors.back().size()));
  }
  plan.validate();
  return plan;
}

ConditioningPlan build_plan(const LocationSet& locs, int m, std::span<const double> scaling,
                            const std::vector<int>* given_order, const NeighborFilter* filter) {
  if (locs.n == 0) throw EmptyInput("build_plan needs at least one location");
  if (m < 1) throw ShapeMismatch("m >= 1 required");
  if (static_cast<int>(scaling.size()) != locs.d) throw DimensionMismatch("scaling length != d");
  for (double s : scaling)
    if (!(s > 0.0)) throw ShapeMismatch("scaling must be strictly positive");

  ConditioningPlan plan;
  plan.m = m;
  if (given_order) {
    plan.order = *given_order;
  } else {
    plan.order.resize(locs.n);
    std::iota(plan.order.begin(), plan.order.end(), 0);
    std::sort(plan.order.begin(), plan.order.end(), [&](int a, int b) {
      for (int q = 0; q < locs.d; ++q) {
        const double xa = locs.coords[static_cast<std::size_t>(a) * locs.d + q];
        const double xb = locs.coords[static_cast<std::size_t>(b) * locs.d + q];
        if (xa != xb) return xa < xb;
      }
      return a < b;
    });
  }

  auto sq_dist = [&](int a, int b) {
    double s = 0.0;
    for (int q = 0; q < locs.d; ++q) {
      const double t = scaling[q] * (locs.coords[static_cast<std::size_t>(a) * locs.d + q] -
                                     locs.coords[static_cast<std::size_t>(b) * locs.d + q]);
      s += t * t;
    }
    return s;
  };

  plan.neighbors.resize(locs.n);
  std::vector<std::pair<double, int>> cand;
  for (int k = 1; k < locs.n; ++k) {
    const int target = plan.order[k];
    cand.clear();
    for (int j = 0; j < k; ++j) {
      const int other = plan.order[j];
      if (filter && !(*filter)(target, other)) continue;
      cand.emplace_back(sq_dist(target, other), j);
    }
    if (cand.empty()) {
      if (filter) plan.flagged.push_back(k);
      continue;
    }
    const std::size_t keep = std::min<std::size_t>(m, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end());
    auto& c = plan.neighbors[k];
    c.reserve(keep);
    for (std::size_t t = 0; t < keep; ++t) c.push_back(cand[t].second);
    std::sort(c.begin(), c.end());
  }
  plan.validate();
  return plan;
}

SparseInvChol::SparseInvChol(std::vector<std::vector<int>> rows, std::vector<ConditionalLaw> laws)
    : rows_(std::move(rows)), laws_(std::move(laws)) {
  if (rows_.size() != laws_.size()) throw ShapeMismatch("SparseInvChol rows/laws size");
  for (std::size_t i = 0; i < laws_.size(); ++i) {
    if (!(laws_[i].sigma > 0.0)) throw ShapeMismatch("factor diagonal must be positive");
    if (rows_[i].size() != laws_[i].beta.size()) throw ShapeMismatch("factor column shape");
    for (int r : rows_[i])
      if (r < 0 || r >= static_cast<int>(i)) throw ShapeMismatch("factor sparsity not upper triangular");
  }
}

SparseInvChol SparseInvChol::from_entries(std::vector<std::vector<int>> rows,
                                          const std::vector<std::vector<double>>& column_entries) {
  std::vector<ConditionalLaw> laws(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (column_entries[i].size() != rows[i].size() + 1) throw ShapeMismatch("column entry count");
    const double d = column_entries[i].back();
    if (!(d > 0.0)) throw ShapeMismatch("factor diagonal must be positive");
    laws[i].sigma = 1.0 / d;
    laws[i].beta.resize(rows[i].size());
    for (std::size_t t = 0; t < rows[i].size(); ++t) laws[i].beta[t] = -column_entries[i][t] / d;
  }
  return SparseInvChol(std::move(rows), std::move(laws));
}

std::vector<double> SparseInvChol::offdiag(int i) const {
  const auto& law = laws_[i];
  std::vector<double> v(law.beta.size());
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = -law.beta[t] / law.sigma;
  return v;
}

Matrix SparseInvChol::to_dense() const {
  const int n = size();
  Matrix v(n, n);
  for (int i = 0; i < n; ++i) {
    v(i, i) = diag(i);
    const auto off = offdiag(i);
    for (std::size_t t = 0; t < rows_[i].size(); ++t) v(rows_[i][t], i) = off[t];
  }
  return v;
}

ConditionalLaw exact_conditional(const SymMatrix& sigma, int i, std::span<const int> c) {
  ConditionalLaw law;
  if (c.empty()) {
    law.sigma = std::sqrt(sigma(i, i));
    return law;
  }
  const std::size_t k = c.size();
  std::vector<double> scc(k * k), sci(k);
  for (std::size_t a = 0; a < k; ++a) {
    sci[a] = sigma(c[a], i);
    for (std::size_t b = 0; b < k; ++b) scc[a * k + b] = sigma(c[a], c[b]);
  }
  const LowerCholesky l = cholesky(SymMatrix(Matrix{k, k, std::move(scc)}));
  const auto w = solve_triangular(l, sci, TriSide::Lower);
  law.beta = solve_triangular(l, w, TriSide::Upper);
  const double explained = dot(w, w);
  const double var = sigma(i, i) - explained;
  if (!(var > 0.0)) throw NotPositiveDefinite("conditional variance <= 0");
  law.sigma = std::sqrt(var);
  return law;
}

ConditionalLaw exact_conditional(const KernelSpec& spec, const LocationSet& locs, int i, std::span<const int> c) {
  // Assemble the (|c|+1)^2 covariance block over c u {i}; the target sits last.
  const int k = static_cast<int>(c.size());
  LocationSet sub(k + 1, locs.d);
  for (int a = 0; a < k; ++a)
    std::copy_n(locs.point(c[a]).data(), locs.d, sub.point_ptr(a));
  std::copy_n(locs.point(i).data(), locs.d, sub.point_ptr(k));
  // Nugget attaches to original index equality; all indices here are distinct
  // observations, so the diagonal of the block gets it and nothing else does.
  const SymMatrix sigma = covariance_matrix(spec, sub);
  std::vector<int> cc(k);
  std::iota(cc.begin(), cc.end(), 0);
  return exact_conditional(sigma, k, cc);
}

SparseInvChol laws_to_factor(const std::vector<ConditionalLaw>& laws, const ConditioningPlan& plan) {
  if (laws.size() != plan.neighbors.size()) throw ShapeMismatch("laws count != plan size");
  std::vector<std::vector<int>> rows(plan.neighbors.begin(), plan.neighbors.end());
  for (std::size_t i = 0; i < laws.size(); ++i) {
    if (laws[i].beta.size() != rows[i].size()) throw ShapeMismatch("law beta length != plan neighbors");
    if (!(laws[i].sigma > 0.0)) throw ShapeMismatch("law sigma must be positive");
  }
  return SparseInvChol(std::move(rows), laws);
}

std::vector<ConditionalLaw> factor_to_laws(const SparseInvChol& factor) { return factor.laws(); }

std::vector<ConditionalLaw> plan_laws(const KernelSpec& spec, const LocationSet& locs,
                                      const ConditioningPlan& plan, int n_threads) {
  const int n = plan.size();
  std::vector<ConditionalLaw> laws(n);
  auto work = [&](int lo, int hi) {
    std::vector<int> c;
    for (int k = lo; k < hi; ++k) {
      c.clear();
      for (int pos : plan.neighbors[k]) c.push_back(plan.order[pos]);
      laws[k] = exact_conditional(spec, locs, plan.order[k], c);
    }
  };
  if (n_threads <= 1 || n < 2 * n_threads) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return laws;
}

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2 pi) / 2
}

double vecchia_nll(const std::vector<ConditionalLaw>& laws, const ConditioningPlan& plan,
                   std::span<const double> y, std::span<const double> mu) {
  const int n = plan.size();
  if (static_cast<int>(laws.size()) != n || static_cast<int>(y.size()) != n || static_cast<int>(mu.size()) != n)
    throw ShapeMismatch("vecchia_nll input sizes");
  double nll = 0.0;
  for (int k = 0; k < n; ++k) {
    const int i = plan.order[k];
    const auto& law = laws[k];
    double cond_mean = mu[i];
    for (std::size_t t = 0; t < law.beta.size(); ++t) {
      const int j = plan.order[plan.neighbors[k][t]];
      cond_mean += law.beta[t] * (y[j] - mu[j]);
    }
    const double r = y[i] - cond_mean;
    nll += std::log(law.sigma) + r * r / (2.0 * law.sigma * law.sigma) + kHalfLog2Pi;
  }
  return nll;
}

std::vector<PredStat> vecchia_predict(const std::vector<ConditionalLaw>& laws, const ConditioningPlan& plan,
                                      std::span<const double> y, std::span<const double> mu,
                                      std::span<const int> target_positions) {
  const int n = plan.size();
  if (static_cast<int>(laws.size()) != n || static_cast<int>(y.size()) != n || static_cast<int>(mu.size()) != n)
    throw ShapeMismatch("vecchia_predict input sizes");
  std::vector<char> is_target(n, 0);
  for (int p : target_positions) {
    if (p < 0 || p >= n) throw ShapeMismatch("target position out of range");
    is_target[p] = 1;
  }
  std::vector<PredStat> out;
  out.reserve(target_positions.size());
  for (int p : target_positions) {
    const auto& law = laws[p];
    const int i = plan.order[p];
    double mean = mu[i];
    for (std::size_t t = 0; t < law.beta.size(); ++t) {
      const int pos = plan.neighbors[p][t];
      if (is_target[pos]) throw ShapeMismatch("target conditions on another target");
      const int j = plan.order[pos];
      mean += law.beta[t] * (y[j] - mu[j]);
    }
    out.push_back({mean, law.sigma});
  }
  return out;
}

}  // namespace neuvec
