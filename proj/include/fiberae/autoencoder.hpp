#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberae/autodiff.hpp"
#include "fiberae/channel.hpp"
#include "fiberae/metrics.hpp"
#include "fiberae/signal.hpp"

namespace fiberae {

/// Embedding W (M,2) and complex shaper F (L_F,2) at the simulation rate.
/// F has odd length; its middle tap sits at lag 0.
struct AeTxParams {
  ad::Tensor embedding;
  ad::Tensor shaper;

  int alphabet_size() const { return static_cast<int>(embedding.rows); }
  std::size_t center() const { return shaper.rows / 2; }
  void validate() const;
};

/// y = x * weight + bias, weight (in,out), bias (1,out).
struct DenseLayer {
  ad::Tensor weight;
  ad::Tensor bias;
};

/// Windowed receiver network: elu after every layer except the last, whose
/// M outputs are logits.
struct AeRxParams {
  std::vector<DenseLayer> layers;
  int n_adj = 0;

  std::size_t window() const { return static_cast<std::size_t>(2 * n_adj + 1); }
  std::size_t input_dim() const { return 2 * window(); }
  int alphabet_size() const;
  void validate() const;
};

struct AeModel {
  AeTxParams tx;
  AeRxParams rx;
};

struct TrainConfig {
  ChannelConfig channel;
  double launch_power_w = 1e-3;
  int alphabet_size = 16;
  std::size_t block_symbols = 256;
  int n_adj = 0;
  std::vector<std::size_t> hidden{256, 128, 128, 128, 128, 128};
  std::size_t shaper_span_symbols = 64;
  long iterations = 2000;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
  std::size_t eval_blocks = 20;

  std::size_t shaper_taps() const { return shaper_span_symbols * channel.oversampling() + 1; }
  /// Learning rate at `iteration`: halved after every quarter of the run.
  double learning_rate_at(long iteration) const;
  void validate() const;
  /// Stable key=value rendering of every field; the checkpoint hash covers it.
  std::string canonical() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// W uniform in [-1,1]^2, F truncated sinc, receiver layers uniform in
/// +-1/sqrt(fan_in). Deterministic in cfg.seed.
AeModel init_model(const TrainConfig& cfg);

/// Square QAM embedding and span-limited sinc shaper: the conventional transmitter
/// expressed in the AE template.
AeTxParams conventional_tx_params(int alphabet_size, std::size_t osf, std::size_t span_symbols);

/// Trainable tensors of a model bound to tape leaves, in a fixed order.
struct ModelVars {
  ad::Var embedding;
  ad::Var shaper;
  std::vector<std::pair<ad::Var, ad::Var>> layers;
};
ModelVars bind(ad::Tape& tape, const AeModel& model, bool requires_grad);

/// Embedding lookup, unit-power normalization over the block, zero-insertion
/// upsampling, circular FIR, transmitter LPF, then normalization to P.
ad::Var ae_tx(ad::Var embedding, ad::Var shaper, const SymbolBlock& s, double launch_power_w,
              const ChannelConfig& cfg);
ComplexSignal ae_tx(const SymbolBlock& s, const AeTxParams& p, double launch_power_w,
                    const ChannelConfig& cfg);

/// Symbol-rate sampling, circular window of 2 n_adj + 1 samples per symbol
/// as interleaved (re, im) pairs scaled by 1/sqrt(P), network logits (N_B, M).
ad::Var ae_rx_logits(ad::Var y, const ModelVars& vars, int n_adj, double launch_power_w,
                     const ChannelConfig& cfg);
/// Per-symbol probability rows.
ad::Tensor ae_rx(const ComplexSignal& y, const AeRxParams& p, double launch_power_w,
                 const ChannelConfig& cfg);

/// Everything needed to continue a run bit-identically.
struct TrainState {
  AeModel model;
  ad::AdamState adam;
  long iteration = 0;
  std::vector<double> loss_history;
};

/// Flattened trainable tensors in ModelVars order.
std::vector<ad::Tensor*> parameters(AeModel& model);

/// One step at `state.iteration` with fresh symbols and noise drawn from
/// substreams of cfg.seed. Returns the mean cross-entropy in nats.
/// Throws TrainingDiverged on a non-finite loss or gradient.
double train_step(TrainState& state, const TrainConfig& cfg);

struct AeEvaluation {
  PooledMi mi;
  double se = 0.0;
  double ser = 0.0;
};

/// Hard decisions on cfg.eval_blocks held-out blocks (symbol and noise
/// substreams disjoint from training).
AeEvaluation evaluate(const AeModel& model, const TrainConfig& cfg);

struct TrainResult {
  TrainState state;
  bool diverged = false;
  std::string diagnostic;
  AeEvaluation evaluation;
};

struct TrainHooks {
  std::optional<TrainState> resume;
  long checkpoint_every = 0;
  std::function<void(const TrainState&)> on_checkpoint;
  std::function<void(long iteration, double loss)> on_progress;
};

TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Writes emb.csv, pulse_tx.csv, pulse_rx.csv and psd_ae_{x,yo,y}.csv into `dir`.
void export_learned_artifacts(const AeModel& model, const TrainConfig& cfg,
                              const std::filesystem::path& dir);
/// Reads back the constellation written by export_learned_artifacts.
CVec load_constellation_csv(const std::filesystem::path& file);

struct ResponseShape {
  double isi_fraction = 0.0;  // energy off the strongest symbol-rate tap
  std::size_t main_tap = 0;
  double curvature = 0.0;  // quadratic coefficient of the unwrapped tap phase, rad/tap^2
  double r_squared = 0.0;
};

/// Single isolated symbol through the shaper and a noiseless, Kerr-free copy of
/// the channel; quadratic fit of the unwrapped shaper phase over its central half.
ResponseShape analyze_shaper(const AeTxParams& tx, const ChannelConfig& cfg, std::size_t block_symbols);

}  // namespace fiberae
