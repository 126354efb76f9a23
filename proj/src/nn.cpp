// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#include "neuvec/nn.hpp"

#include <cmath>
#include <thread>

#include "neuvec/errors.hpp"

namespace neuvec {

namespace {

constexpr double kSigmaFloor = 1e-6;
constexpr double kHalfLog2Pi = 0.9189385332046727;

// Per-layer tape node ids of one MLP block bound into a tape.
struct BoundBlock {
  std::vector<int> w_ids;
  std::vector<int> b_ids;
};

// Bound parameter leaves for the whole model, in block order.
struct BoundModel {
  std::vector<BoundBlock> blocks;
};

Matrix layer_weight(const NeuVecModel& model, int block, int layer, std::size_t& off) {
  const MlpConfig& cfg = model.block_config(block);
  Matrix w(cfg.widths[layer], cfg.widths[layer + 1]);
  std::copy_n(model.theta.data() + off, w.data.size(), w.data.data());
  off += w.data.size();
  return w;
}

Matrix layer_bias(const NeuVecModel& model, int block, int layer, std::size_t& off) {
  const MlpConfig& cfg = model.block_config(block);
  Matrix b(1, cfg.widths[layer + 1]);
  std::copy_n(model.theta.data() + off, b.data.size(), b.data.data());
  off += b.data.size();
  return b;
}

BoundModel bind_model(Tape& tape, const NeuVecModel& model, bool with_grad) {
  BoundModel bound;
  bound.blocks.resize(model.block_count());
  std::size_t off = 0;
  for (int b = 0; b < model.block_count(); ++b) {
    const MlpConfig& cfg = model.block_config(b);
    for (int l = 0; l < cfg.layer_count(); ++l) {
      Matrix w = layer_weight(model, b, l, off);
      Matrix bias = layer_bias(model, b, l, off);
      bound.blocks[b].w_ids.push_back(with_grad ? tape.param(std::move(w)) : tape.input(std::move(w)));
      bound.blocks[b].b_ids.push_back(with_grad ? tape.param(std::move(bias)) : tape.input(std::move(bias)));
    }
  }
  return bound;
}

// Hidden layers: tanh then dropout; the output layer is affine.
int mlp_forward(Tape& tape, const MlpConfig& cfg, const BoundBlock& block, int x, bool train_mode,
                RngState* dropout_rng) {
  int h = x;
  for (int l = 0; l < cfg.layer_count(); ++l) {
    h = tape.add_rowvec(tape.matmul(h, block.w_ids[l]), block.b_ids[l]);
    if (l + 1 < cfg.layer_count()) {
      h = tape.tanh(h);
      if (train_mode && cfg.dropout_rate > 0.0 && dropout_rng)
        h = tape.dropout(h, cfg.dropout_rate, *dropout_rng, true);
    }
  }
  return h;
}

// sigma head over stacked augmented rows (B*m x d_A) -> B x 1, positive.
int sigma_head(Tape& tape, const NeuVecModel& model, const BoundModel& bound, int rows, int m, bool train_mode,
               RngState* dropout_rng) {
  const int phis = mlp_forward(tape, model.phi_sigma, bound.blocks[3], rows, train_mode, dropout_rng);
  const int pooled = tape.group_sum(phis, m);
  const int raw = mlp_forward(tape, model.rho_sigma, bound.blocks[4], pooled, train_mode, dropout_rng);
  return tape.add_scalar(tape.softplus(raw), kSigmaFloor);
}

// coefficient head over stacked augmented rows (B*m x d_A) -> B*m x 1.
int mu_head(Tape& tape, const NeuVecModel& model, const BoundModel& bound, int rows, int m, bool train_mode,
            RngState* dropout_rng) {
  const int phis = mlp_forward(tape, model.phi_mu, bound.blocks[0], rows, train_mode, dropout_rng);
  const int totals = tape.group_sum(phis, m);
  // Leave-one-out sums as total minus own term; for m = 1 this is exactly
  // the zero vector.
  const int loo = tape.sub(tape.repeat_rows(totals, m), phis);
  const int context = mlp_forward(tape, model.rho2_mu, bound.blocks[2], loo, train_mode, dropout_rng);
  const int left = model.rho1_input == Rho1Input::Phi ? phis : rows;
  const int joined = tape.concat_cols(left, context);
  return mlp_forward(tape, model.rho1_mu, bound.blocks[1], joined, train_mode, dropout_rng);
}

struct BatchTensors {
  Matrix aug_rows;   // B*m x d_A
  Matrix cond_locs;  // B*m x d   (raw coordinates, for the mean net)
  Matrix targ_locs;  // B x d
  Matrix y_cond;     // B*m x 1
  Matrix y_targ;     // B x 1
};

BatchTensors stack_batch(const NeuVecModel& model, const TrainingBatch& batch, std::size_t lo, std::size_t hi) {
  const int m = batch.m, d = batch.d;
  if (d != model.d) throw ShapeMismatch("batch dimension != model dimension");
  const std::size_t nb = hi - lo;
  BatchTensors t;
  t.aug_rows = Matrix(nb * m, model.d_aug());
  t.cond_locs = Matrix(nb * m, d);
  t.targ_locs = Matrix(nb, d);
  t.y_cond = Matrix(nb * m, 1);
  t.y_targ = Matrix(nb, 1);
  for (std::size_t g = 0; g < nb; ++g) {
    const Group& grp = batch.groups[lo + g];
    if (grp.locs.rows != static_cast<std::size_t>(m + 1) || grp.locs.cols != static_cast<std::size_t>(d) ||
        grp.y.size() != static_cast<std::size_t>(m + 1))
      throw ShapeMismatch("group shape inconsistent with batch m, d");
    Matrix xc(m, d);
    std::copy_n(grp.locs.data.data(), static_cast<std::size_t>(m) * d, xc.data.data());
    const Matrix aug = augment(xc, grp.locs.row(m), model.augmentation);
    std::copy_n(aug.data.data(), aug.data.size(), t.aug_rows.row_ptr(g * m));
    std::copy_n(xc.data.data(), xc.data.size(), t.cond_locs.row_ptr(g * m));
    std::copy_n(grp.locs.row_ptr(m), d, t.targ_locs.row_ptr(g));
    for (int j = 0; j < m; ++j) t.y_cond(g * m + j, 0) = grp.y[j];
    t.y_targ(g, 0) = grp.y[m];
  }
  return t;
}

// Builds the full loss graph for groups [lo, hi); returns the 1x1 loss node.
int loss_graph(Tape& tape, const NeuVecModel& model, const BoundModel& bound, const TrainingBatch& batch,
               std::size_t lo, std::size_t hi, bool train_mode, RngState* dropout_rng) {
  const int m = batch.m;
  BatchTensors t = stack_batch(model, batch, lo, hi);
  const std::size_t nb = hi - lo;

  const int y_cond = tape.input(std::move(t.y_cond));
  const int y_targ = tape.input(std::move(t.y_targ));
  const int rows = tape.input(std::move(t.aug_rows));

  const int beta = mu_head(tape, model, bound, rows, m, train_mode, dropout_rng);
  const int sigma = sigma_head(tape, model, bound, rows, m, train_mode, dropout_rng);

  int centered_cond = y_cond;
  int pred = -1;
  if (model.mean_net) {
    const int cond_locs = tape.input(std::move(t.cond_locs));
    const int targ_locs = tape.input(std::move(t.targ_locs));
    const int mu_cond = mlp_forward(tape, *model.mean_net, bound.blocks[5], cond_locs, train_mode, dropout_rng);
    const int mu_targ = mlp_forward(tape, *model.mean_net, bound.blocks[5], targ_locs, train_mode, dropout_rng);
    centered_cond = tape.sub(y_cond, mu_cond);
    pred = tape.add(mu_targ, tape.group_sum(tape.mul(beta, centered_cond), m));
  } else {
    pred = tape.group_sum(tape.mul(beta, centered_cond), m);
  }

  const int resid = tape.sub(y_targ, pred);
  const int z = tape.div(resid, sigma);
  const int per_group = tape.add(tape.log(sigma), tape.scale(tape.mul(z, z), 0.5));
  return tape.add_scalar(tape.scale(tape.sum_all(per_group), 1.0 / static_cast<double>(nb)), kHalfLog2Pi);
}

LossResult run_shard(const NeuVecModel& model, const TrainingBatch& batch, std::size_t lo, std::size_t hi,
                     bool train_mode, RngState* dropout_rng) {
  Tape tape;
  const BoundModel bound = bind_model(tape, model, true);
  const int loss = loss_graph(tape, model, bound, batch, lo, hi, train_mode, dropout_rng);
  tape.backward(loss);

  LossResult out;
  out.loss = tape.value(loss)(0, 0);
  out.grad.resize(model.theta.size());
  std::size_t off = 0;
  for (int b = 0; b < model.block_count(); ++b) {
    const auto& blk = bound.blocks[b];
    for (std::size_t l = 0; l < blk.w_ids.size(); ++l) {
      const Matrix& gw = tape.grad(blk.w_ids[l]);
      std::copy_n(gw.data.data(), gw.data.size(), out.grad.data() + off);
      off += gw.data.size();
      const Matrix& gb = tape.grad(blk.b_ids[l]);
      std::copy_n(gb.data.data(), gb.data.size(), out.grad.data() + off);
      off += gb.data.size();
    }
  }
  return out;
}

}  // namespace

Matrix augment(const Matrix& x_c, std::span<const double> x_i, AugMode mode) {
  const std::size_t m = x_c.rows, d = x_c.cols;
  if (x_i.size() != d) throw ShapeMismatch("augment target dimension");
  if (mode == AugMode::Concat) {
    Matrix out(m, 2 * d);
    for (std::size_t j = 0; j < m; ++j) {
      std::copy_n(x_c.row_ptr(j), d, out.row_ptr(j));
      std::copy_n(x_i.data(), d, out.row_ptr(j) + d);
    }
    return out;
  }
  Matrix out(m, 2 * d + 1);
  for (std::size_t j = 0; j < m; ++j) {
    double dist2 = 0.0;
    for (std::size_t q = 0; q < d; ++q) {
      const double t = x_c(j, q) - x_i[q];
      dist2 += t * t;
    }
    const double dist = std::sqrt(dist2);
    if (dist == 0.0) throw ZeroDistance("conditioning row coincides with the target");
    double* row = out.row_ptr(j);
    row[0] = dist;
    for (std::size_t q = 0; q < d; ++q) row[1 + q] = (x_c(j, q) - x_i[q]) / dist;
    std::copy_n(x_i.data(), d, row + 1 + d);
  }
  return out;
}

double forward_sigma(const NeuVecModel& model, const Matrix& x_c, std::span<const double> x_i, bool train_mode,
                     RngState* dropout_rng) {
  if (x_c.rows == 0) throw ShapeMismatch("forward_sigma needs at least one conditioning row");
  Tape tape;
  const BoundModel bound = bind_model(tape, model, false);
  const int rows = tape.input(augment(x_c, x_i, model.augmentation));
  const int sigma = sigma_head(tape, model, bound, rows, static_cast<int>(x_c.rows), train_mode, dropout_rng);
  return tape.value(sigma)(0, 0);
}

std::vector<double> forward_mu(const NeuVecModel& model, const Matrix& x_c, std::span<const double> x_i,
                               bool train_mode, RngState* dropout_rng) {
  if (x_c.rows == 0) throw ShapeMismatch("forward_mu needs at least one conditioning row");
  Tape tape;
  const BoundModel bound = bind_model(tape, model, false);
  const int rows = tape.input(augment(x_c, x_i, model.augmentation));
  const int beta = mu_head(tape, model, bound, rows, static_cast<int>(x_c.rows), train_mode, dropout_rng);
  const Matrix& v = tape.value(beta);
  return {v.data.begin(), v.data.end()};
}

double forward_mean(const NeuVecModel& model, std::span<const double> x, bool train_mode, RngState* dropout_rng) {
  if (!model.mean_net) throw MeanNetAbsent("forward_mean");
  if (static_cast<int>(x.size()) != model.d) throw ShapeMismatch("forward_mean input dimension");
  Tape tape;
  const BoundModel bound = bind_model(tape, model, false);
  Matrix row(1, model.d);
  std::copy_n(x.data(), x.size(), row.data.data());
  const int out = mlp_forward(tape, *model.mean_net, bound.blocks[5], tape.input(std::move(row)), train_mode,
                              dropout_rng);
  return tape.value(out)(0, 0);
}

LossResult batch_nll_loss(const NeuVecModel& model, const TrainingBatch& batch, bool train_mode,
                          RngState* dropout_rng) {
  if (batch.groups.empty()) throw ShapeMismatch("empty batch");
  return run_shard(model, batch, 0, batch.groups.size(), train_mode, dropout_rng);
}

LossResult batch_nll_loss_sharded(const NeuVecModel& model, const TrainingBatch& batch, bool train_mode,
                                  int shards, std::uint64_t dropout_seed) {
  if (batch.groups.empty()) throw ShapeMismatch("empty batch");
  const std::size_t nb = batch.groups.size();
  const int s = std::max(1, std::min<int>(shards, static_cast<int>(nb)));
  if (s == 1) {
    RngState rng(dropout_seed);
    return run_shard(model, batch, 0, nb, train_mode, train_mode ? &rng : nullptr);
  }
  std::vector<LossResult> parts(s);
  std::vector<std::thread> pool;
  const std::size_t chunk = (nb + s - 1) / s;
  for (int t = 0; t < s; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(nb, lo + chunk);
    if (lo >= hi) continue;
    pool.emplace_back([&, t, lo, hi] {
      RngState rng = RngState(dropout_seed).split(static_cast<std::uint64_t>(t) + 1);
      parts[t] = run_shard(model, batch, lo, hi, train_mode, train_mode ? &rng : nullptr);
    });
  }
  for (auto& th : pool) th.join();

  // Combine in fixed shard order so the result is independent of scheduling.
  LossResult out;
  out.loss = 0.0;
  out.grad.assign(model.theta.size(), 0.0);
  for (int t = 0; t < s; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(nb, lo + chunk);
    if (lo >= hi) continue;
    const double w = static_cast<double>(hi - lo) / static_cast<double>(nb);
    out.loss += w * parts[t].loss;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += w * parts[t].grad[i];
  }
  return out;
}

std::vector<Prediction> neuvec_predict(const NeuVecModel& model, const TrainingBatch& batch) {
  const std::size_t nb = batch.groups.size();
  std::vector<Prediction> preds(nb);
  const std::size_t chunk = 512;
  for (std::size_t lo = 0; lo < nb; lo += chunk) {
    const std::size_t hi = std::min(nb, lo + chunk);
    Tape tape;
    const BoundModel bound = bind_model(tape, model, false);
    BatchTensors t = stack_batch(model, batch, lo, hi);
    Matrix y_cond_vals = t.y_cond;
    const int rows = tape.input(std::move(t.aug_rows));
    const int beta = mu_head(tape, model, bound, rows, batch.m, false, nullptr);
    const int sigma = sigma_head(tape, model, bound, rows, batch.m, false, nullptr);

    const int y_cond = tape.input(std::move(y_cond_vals));
    int centered = y_cond;
    int mu_t = -1;
    if (model.mean_net) {
      const int cond_locs = tape.input(std::move(t.cond_locs));
      const int targ_locs = tape.input(std::move(t.targ_locs));
      const int mu_cond = mlp_forward(tape, *model.mean_net, bound.blocks[5], cond_locs, false, nullptr);
      mu_t = mlp_forward(tape, *model.mean_net, bound.blocks[5], targ_locs, false, nullptr);
      centered = tape.sub(y_cond, mu_cond);
    }
    int pred = tape.group_sum(tape.mul(beta, centered), batch.m);
    if (mu_t >= 0) pred = tape.add(pred, mu_t);
    const Matrix& pm = tape.value(pred);
    const Matrix& ps = tape.value(sigma);
    for (std::size_t g = lo; g < hi; ++g) preds[g] = {pm(g - lo, 0), ps(g - lo, 0)};
  }
  return preds;
}

}  // namespace neuvec
