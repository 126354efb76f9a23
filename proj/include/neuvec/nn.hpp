// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_NN_HPP
#define NEUVEC_NN_HPP

#include <vector>

#include "neuvec/model.hpp"
#include "neuvec/tape.hpp"

namespace neuvec {

/// One training group: m conditioning pairs plus a target, locations
/// row-major (m+1) x d with the target last.
struct Group {
  Matrix locs;
  std::vector<double> y;
};

/// N_batch independent groups sharing the same m and d.
struct TrainingBatch {
  int m = 0;
  int d = 0;
  std::vector<Group> groups;
};

/// Augmented representation of the conditioning rows for one target:
/// row j = [X_c[j], x_i] in Concat mode, [dist_j, unit_dir_j, x_i] in
/// DistanceDirection mode. The latter throws ZeroDistance on coincident
/// points.
Matrix augment(const Matrix& x_c, std::span<const double> x_i, AugMode mode);

/// Conditional-sd head: softplus(rho(sum_j phi(row_j))) + 1e-6.
double forward_sigma(const NeuVecModel& model, const Matrix& x_c, std::span<const double> x_i, bool train_mode,
                     RngState* dropout_rng = nullptr);

/// Kriging-coefficient head: beta_j = rho1(left_j, rho2(sum_{k!=j} phi(row_k)))
/// with the leave-one-out sums computed as total-minus-own.
std::vector<double> forward_mu(const NeuVecModel& model, const Matrix& x_c, std::span<const double> x_i,
                               bool train_mode, RngState* dropout_rng = nullptr);

/// Scalar mean prediction; requires the optional mean network.
double forward_mean(const NeuVecModel& model, std::span<const double> x, bool train_mode = false,
                    RngState* dropout_rng = nullptr);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // aligned with model.theta
};

/// Mean over groups of the Gaussian negative log-likelihood of the target
/// given its conditioning responses, with gradients for every parameter.
LossResult batch_nll_loss(const NeuVecModel& model, const TrainingBatch& batch, bool train_mode,
                          RngState* dropout_rng = nullptr);

/// Same value, computed over `shards` disjoint contiguous group shards on
/// separate tapes (worker threads), combined in fixed shard order. With one
/// shard this is exactly batch_nll_loss.
LossResult batch_nll_loss_sharded(const NeuVecModel& model, const TrainingBatch& batch, bool train_mode,
                                  int shards, std::uint64_t dropout_seed = 0);

struct Prediction {
  double mean = 0.0;
  double sd = 1.0;
};

/// Eval-mode predictive mean/sd for each group's target.
std::vector<Prediction> neuvec_predict(const NeuVecModel& model, const TrainingBatch& batch);

}  // namespace neuvec

#endif
