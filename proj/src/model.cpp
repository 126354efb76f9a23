// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#include "neuvec/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "neuvec/errors.hpp"

namespace neuvec {

void MlpConfig::validate() const {
  if (widths.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  for (int w : widths)
    if (w < 1) throw ConfigError("mlp widths must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
}

std::size_t mlp_param_count(const MlpConfig& cfg) {
  std::size_t n = 0;
  for (int l = 0; l < cfg.layer_count(); ++l)
    n += static_cast<std::size_t>(cfg.widths[l]) * cfg.widths[l + 1] + cfg.widths[l + 1];
  return n;
}

const MlpConfig& NeuVecModel::block_config(int block) const {
  switch (block) {
    case 0: return phi_mu;
    case 1: return rho1_mu;
    case 2: return rho2_mu;
    case 3: return phi_sigma;
    case 4: return rho_sigma;
    case 5:
      if (mean_net) return *mean_net;
      throw MeanNetAbsent("block 5 requested");
  }
  throw ConfigError("bad block index");
}

std::size_t NeuVecModel::block_offset(int block) const {
  std::size_t off = 0;
  for (int b = 0; b < block; ++b) off += mlp_param_count(block_config(b));
  return off;
}

void NeuVecModel::validate() const {
  phi_mu.validate();
  rho1_mu.validate();
  rho2_mu.validate();
  phi_sigma.validate();
  rho_sigma.validate();
  if (mean_net) mean_net->validate();
  if (d < 1) throw ConfigError("model d >= 1 required");
  if (phi_mu.input_dim() != d_aug() || phi_sigma.input_dim() != d_aug())
    throw ConfigError("phi input width must equal the augmented dimension");
  if (rho2_mu.input_dim() != phi_mu.output_dim())
    throw ConfigError("rho2 input width must equal phi output width");
  const int left = rho1_input == Rho1Input::Phi ? phi_mu.output_dim() : d_aug();
  if (rho1_mu.input_dim() != left + rho2_mu.output_dim())
    throw ConfigError("rho1 input width must equal its two concatenated inputs");
  if (rho1_mu.output_dim() != 1 || rho_sigma.output_dim() != 1)
    throw ConfigError("network heads are scalar-valued");
  if (rho_sigma.input_dim() != phi_sigma.output_dim())
    throw ConfigError("sigma rho input width must equal phi output width");
  if (mean_net && (mean_net->input_dim() != d || mean_net->output_dim() != 1))
    throw ConfigError("mean net maps d inputs to one output");
  std::size_t n = 0;
  for (int b = 0; b < block_count(); ++b) n += mlp_param_count(block_config(b));
  if (n != theta.size()) throw ConfigError("parameter buffer size mismatch");
}

NeuVecModel NeuVecModel::create(int d, AugMode aug, Rho1Input rho1_input, const MlpConfig& phi_mu,
                                const MlpConfig& rho1_mu, const MlpConfig& rho2_mu, const MlpConfig& phi_sigma,
                                const MlpConfig& rho_sigma, const std::optional<MlpConfig>& mean_net,
                                RngState& rng) {
  NeuVecModel m;
  m.d = d;
  m.augmentation = aug;
  m.rho1_input = rho1_input;
  m.init_seed = rng.seed();
  m.phi_mu = phi_mu;
  m.rho1_mu = rho1_mu;
  m.rho2_mu = rho2_mu;
  m.phi_sigma = phi_sigma;
  m.rho_sigma = rho_sigma;
  m.mean_net = mean_net;

  std::size_t total = 0;
  for (int b = 0; b < m.block_count(); ++b) total += mlp_param_count(m.block_config(b));
  m.theta.resize(total);

  std::size_t off = 0;
  for (int b = 0; b < m.block_count(); ++b) {
    const MlpConfig& cfg = m.block_config(b);
    for (int l = 0; l < cfg.layer_count(); ++l) {
      const int fan_in = cfg.widths[l], fan_out = cfg.widths[l + 1];
      const double a = std::sqrt(6.0 / fan_in);  // uniform with variance 2/fan_in
      for (int i = 0; i < fan_in * fan_out; ++i) m.theta[off++] = rng.uniform(-a, a);
      off += fan_out;  // biases stay zero
    }
  }
  m.validate();
  return m;
}

NeuVecModel NeuVecModel::preset(const std::string& name, int d, bool with_mean_net, double dropout_rate,
                                RngState& rng) {
  const int da = 2 * d;
  MlpConfig phi_mu, rho1, rho2, phi_s, rho_s;
  if (name == "table1") {
    phi_mu.widths = {da, 128, 128, 128, 64};
    rho1.widths = {128, 128, 128, 128, 1};
    rho2.widths = {64, 128, 128, 128, 64};
    phi_s.widths = {da, 128, 128, 128, 64};
    rho_s.widths = {64, 128, 128, 128, 1};
  } else if (name == "table4") {
    phi_mu.widths = {da, 16, 16, 16, 16};
    rho1.widths = {32, 16, 16, 16, 1};
    rho2.widths = {16, 16, 16, 16, 16};
    phi_s.widths = {da, 16, 16, 16, 16};
    rho_s.widths = {16, 16, 16, 16, 1};
  } else if (name == "desk") {
    phi_mu.widths = {da, 48, 48, 32};
    rho1.widths = {64, 48, 48, 1};
    rho2.widths = {32, 48, 32};
    phi_s.widths = {da, 48, 48, 32};
    rho_s.widths = {32, 48, 48, 1};
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected table1 | table4 | desk)");
  }
  for (MlpConfig* c : {&phi_mu, &rho1, &rho2, &phi_s, &rho_s}) c->dropout_rate = dropout_rate;
  std::optional<MlpConfig> mean;
  if (with_mean_net) {
    mean = MlpConfig{{d, 8, 8, 8, 1}, dropout_rate};
  }
  return create(d, AugMode::Concat, Rho1Input::Phi, phi_mu, rho1, rho2, phi_s, rho_s, mean, rng);
}

namespace {

constexpr std::uint32_t kMagic = 0x4B43564EU;  // "NVCK"
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ofstream& f, std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); }
void put_i64(std::ofstream& f, std::int64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64s(std::ofstream& f, const std::vector<double>& v) {
  f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

std::uint32_t get_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t get_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::int64_t get_i64(std::ifstream& f) {
  std::int64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
void get_f64s(std::ifstream& f, std::vector<double>& v) {
  f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

void put_cfg(std::ofstream& f, const MlpConfig& cfg) {
  put_u32(f, static_cast<std::uint32_t>(cfg.widths.size()));
  for (int w : cfg.widths) put_u32(f, static_cast<std::uint32_t>(w));
  const double r = cfg.dropout_rate;
  f.write(reinterpret_cast<const char*>(&r), 8);
}

MlpConfig get_cfg(std::ifstream& f) {
  MlpConfig cfg;
  const std::uint32_t n = get_u32(f);
  cfg.widths.resize(n);
  for (auto& w : cfg.widths) w = static_cast<int>(get_u32(f));
  f.read(reinterpret_cast<char*>(&cfg.dropout_rate), 8);
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const NeuVecModel& model, const TrainingCursor& cursor,
                     const OptStateBlob* opt_state) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  put_u32(f, kMagic);
  put_u32(f, kVersion);
  put_u32(f, static_cast<std::uint32_t>(model.d));
  put_u32(f, static_cast<std::uint32_t>(model.d_aug()));
  put_u32(f, model.augmentation == AugMode::Concat ? 0 : 1);
  put_u32(f, model.rho1_input == Rho1Input::Phi ? 0 : 1);
  put_u32(f, model.mean_net ? 1 : 0);
  put_u64(f, model.init_seed);
  put_u64(f, cursor.data_seed);
  put_u64(f, cursor.data_counter);
  put_u64(f, cursor.dropout_seed);
  put_i64(f, cursor.iteration);
  put_u32(f, static_cast<std::uint32_t>(model.block_count()));
  for (int b = 0; b < model.block_count(); ++b) put_cfg(f, model.block_config(b));
  put_u64(f, model.theta.size());
  put_f64s(f, model.theta);
  put_u32(f, opt_state ? 1 : 0);
  if (opt_state) {
    put_u64(f, opt_state->step);
    if (opt_state->m.size() != model.theta.size() || opt_state->v.size() != model.theta.size())
      throw ShapeMismatch("optimizer state size != parameter count");
    put_f64s(f, opt_state->m);
    put_f64s(f, opt_state->v);
  }
  if (!f) throw IoError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  if (get_u32(f) != kMagic) throw ConfigError("not a checkpoint file: " + path);
  const std::uint32_t version = get_u32(f);
  if (version != kVersion)
    throw ConfigError("checkpoint format version " + std::to_string(version) + " not supported (expected " +
                      std::to_string(kVersion) + ")");
  Checkpoint ck;
  NeuVecModel& m = ck.model;
  m.d = static_cast<int>(get_u32(f));
  const std::uint32_t d_aug = get_u32(f);
  m.augmentation = get_u32(f) == 0 ? AugMode::Concat : AugMode::DistanceDirection;
  m.rho1_input = get_u32(f) == 0 ? Rho1Input::Phi : Rho1Input::Raw;
  const bool has_mean = get_u32(f) != 0;
  m.init_seed = get_u64(f);
  ck.cursor.data_seed = get_u64(f);
  ck.cursor.data_counter = get_u64(f);
  ck.cursor.dropout_seed = get_u64(f);
  ck.cursor.iteration = get_i64(f);
  const std::uint32_t blocks = get_u32(f);
  if (blocks != (has_mean ? 6u : 5u)) throw ConfigError("checkpoint block count mismatch");
  m.phi_mu = get_cfg(f);
  m.rho1_mu = get_cfg(f);
  m.rho2_mu = get_cfg(f);
  m.phi_sigma = get_cfg(f);
  m.rho_sigma = get_cfg(f);
  if (has_mean) m.mean_net = get_cfg(f);
  const std::uint64_t n = get_u64(f);
  m.theta.resize(n);
  get_f64s(f, m.theta);
  if (get_u32(f) != 0) {
    OptStateBlob opt;
    opt.step = get_u64(f);
    opt.m.resize(n);
    opt.v.resize(n);
    get_f64s(f, opt.m);
    get_f64s(f, opt.v);
    ck.opt_state = std::move(opt);
  }
  if (!f) throw IoError("truncated checkpoint: " + path);
  if (static_cast<int>(d_aug) != m.d_aug()) throw ConfigError("checkpoint augmented dimension mismatch");
  m.validate();
  return ck;
}

}  // namespace neuvec
