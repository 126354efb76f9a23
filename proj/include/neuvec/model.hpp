// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_MODEL_HPP
#define NEUVEC_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "neuvec/rng.hpp"

namespace neuvec {

/// How conditioning rows are presented to the networks: plain concatenation
/// [x_j, x_i] (width 2d) or [dist, unit direction, x_i] (width 2d + 1).
enum class AugMode { Concat, DistanceDirection };

/// What the coefficient head's outer network receives next to the pooled
/// context: the per-row latent feature (default) or the raw augmented row.
enum class Rho1Input { Phi, Raw };

struct MlpConfig {
  std::vector<int> widths;  // first = input dim, last = output dim
  double dropout_rate = 0.0;

  void validate() const;
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int layer_count() const { return static_cast<int>(widths.size()) - 1; }
};

/// Parameters of the kriging-coefficient network (phi/rho1/rho2 blocks), the
/// conditional-sd network (phi/rho blocks) and an optional mean network.
/// All parameters live in one flat 64-bit buffer; layers are row-major
/// (in x out) weight matrices followed by their bias rows, blocks in
/// declared order.
struct NeuVecModel {
  int d = 3;
  AugMode augmentation = AugMode::Concat;
  Rho1Input rho1_input = Rho1Input::Phi;
  std::uint64_t init_seed = 0;

  MlpConfig phi_mu, rho1_mu, rho2_mu;
  MlpConfig phi_sigma, rho_sigma;
  std::optional<MlpConfig> mean_net;

  std::vector<double> theta;

  int d_aug() const { return augmentation == AugMode::Concat ? 2 * d : 2 * d + 1; }
  std::size_t param_count() const { return theta.size(); }

  /// Offset of a block's parameters inside theta. Blocks are indexed in
  /// declared order: 0 phi_mu, 1 rho1_mu, 2 rho2_mu, 3 phi_sigma,
  /// 4 rho_sigma, 5 mean_net.
  std::size_t block_offset(int block) const;
  const MlpConfig& block_config(int block) const;
  int block_count() const { return mean_net ? 6 : 5; }

  void validate() const;

  /// Fresh model with weights ~ U[-sqrt(6/fan_in), sqrt(6/fan_in)] and zero
  /// biases, drawn from rng in block/layer order.
  static NeuVecModel create(int d, AugMode aug, Rho1Input rho1_input, const MlpConfig& phi_mu,
                            const MlpConfig& rho1_mu, const MlpConfig& rho2_mu, const MlpConfig& phi_sigma,
                            const MlpConfig& rho_sigma, const std::optional<MlpConfig>& mean_net, RngState& rng);

  /// Named architecture presets: "table1" (simulation-study scale), "table4"
  /// (reduced application scale), "desk" (small CPU-friendly default).
  static NeuVecModel preset(const std::string& name, int d, bool with_mean_net, double dropout_rate, RngState& rng);
};

std::size_t mlp_param_count(const MlpConfig& cfg);

/// Training-progress state persisted alongside the model so interrupted runs
/// continue exactly.
struct TrainingCursor {
  std::uint64_t data_seed = 0;
  std::uint64_t data_counter = 0;
  std::uint64_t dropout_seed = 0;
  std::int64_t iteration = 0;
};

struct OptStateBlob {
  std::uint64_t step = 0;
  std::vector<double> m, v;
};

/// Versioned binary checkpoint. Round-trips bit-exactly; loading refuses a
/// mismatched format version.
void save_checkpoint(const std::string& path, const NeuVecModel& model, const TrainingCursor& cursor,
                     const OptStateBlob* opt_state);
struct Checkpoint {
  NeuVecModel model;
  TrainingCursor cursor;
  std::optional<OptStateBlob> opt_state;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace neuvec

#endif
