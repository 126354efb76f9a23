// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_VECCHIA_HPP
#define NEUVEC_VECCHIA_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuvec/kernels.hpp"
#include "neuvec/linalg.hpp"

namespace neuvec {

/// Ordering of observations plus per-position conditioning sets.
///
/// `order[k]` is the original observation index at position k. `neighbors[k]`
/// lists conditioning *positions*, each < k, sorted ascending, at most m of
/// them. Position 0 always conditions on nothing.
struct ConditioningPlan {
  std::vector<int> order;
  std::vector<std::vector<int>> neighbors;
  int m = 0;
  /// Positions that requested neighbors but had no eligible candidate
  /// (application data with exclusion rules); they stay in the plan with an
  /// empty conditioning set.
  std::vector<int> flagged;

  int size() const { return static_cast<int>(order.size()); }
  void validate() const;

  /// Flat text form, one line per position: `orig_index: n1 n2 ...` where the
  /// neighbor ids are original observation indices of the conditioning set.
  std::string to_text() const;
  static ConditioningPlan from_text(const std::string& text);
};

/// Optional eligibility predicate for neighbor candidates:
/// called as keep(target_original_index, candidate_original_index).
using NeighborFilter = std::function<bool(int, int)>;

/// Builds a plan over the locations. Order defaults to lexicographic by
/// coordinates (ties by index); a caller-supplied order wins when given.
/// Conditioning sets are the up-to-m nearest earlier points under the
/// coordinate-wise scaled Euclidean metric (exact brute force).
ConditioningPlan build_plan(const LocationSet& locs, int m, std::span<const double> scaling,
                            const std::vector<int>* given_order = nullptr,
                            const NeighborFilter* filter = nullptr);

/// Kriging coefficients and conditional standard deviation of one
/// observation given its conditioning set.
struct ConditionalLaw {
  std::vector<double> beta;
  double sigma = 1.0;
};

/// Sparse inverse Cholesky factor V with upper-triangular sparsity
/// c(i) u {i} per column. Columns are stored in kriging form (beta, sigma),
/// which corresponds one-to-one with the factor entries:
///   V[i,i] = 1 / sigma_i,  V[c(i),i] = -beta_i / sigma_i.
/// Entry views are materialized from that representation on demand.
class SparseInvChol {
 public:
  SparseInvChol(std::vector<std::vector<int>> rows, std::vector<ConditionalLaw> laws);
  /// Builds from raw column entries ordered as (entries at c(i)..., diagonal).
  static SparseInvChol from_entries(std::vector<std::vector<int>> rows,
                                    const std::vector<std::vector<double>>& column_entries);

  int size() const { return static_cast<int>(laws_.size()); }
  const std::vector<int>& column_rows(int i) const { return rows_[i]; }
  double diag(int i) const { return 1.0 / laws_[i].sigma; }
  std::vector<double> offdiag(int i) const;
  const std::vector<ConditionalLaw>& laws() const { return laws_; }

  Matrix to_dense() const;

 private:
  std::vector<std::vector<int>> rows_;
  std::vector<ConditionalLaw> laws_;
};

/// Exact conditional law of entry i given index set c under a dense
/// covariance, via Cholesky of Sigma_{c,c}.
ConditionalLaw exact_conditional(const SymMatrix& sigma, int i, std::span<const int> c);

/// Same, with the covariance generated on the fly from a kernel (only the
/// (|c|+1)^2 needed entries are formed).
ConditionalLaw exact_conditional(const KernelSpec& spec, const LocationSet& locs, int i, std::span<const int> c);

SparseInvChol laws_to_factor(const std::vector<ConditionalLaw>& laws, const ConditioningPlan& plan);
std::vector<ConditionalLaw> factor_to_laws(const SparseInvChol& factor);

/// Conditional laws for every position of a plan under a kernel. Positions
/// are independent; n_threads > 1 shards them with deterministic placement.
std::vector<ConditionalLaw> plan_laws(const KernelSpec& spec, const LocationSet& locs,
                                      const ConditioningPlan& plan, int n_threads = 1);

/// Negative log of the approximate density: sum over positions of
/// log sigma_i + (y_i - mu_{i|c(i)})^2 / (2 sigma_i^2) + log(2 pi)/2,
/// accumulated in position order. y and mu are indexed by original ids.
double vecchia_nll(const std::vector<ConditionalLaw>& laws, const ConditioningPlan& plan,
                   std::span<const double> y, std::span<const double> mu);

struct PredStat {
  double mean = 0.0;
  double sd = 1.0;
};

/// Predictive mean/sd for target positions. Every target must condition on
/// observed (non-target) positions only. y holds responses for original ids
/// of observed points (entries at target ids are ignored).
std::vector<PredStat> vecchia_predict(const std::vector<ConditionalLaw>& laws, const ConditioningPlan& plan,
                                      std::span<const double> y, std::span<const double> mu,
                                      std::span<const int> target_positions);

}  // namespace neuvec

#endif
