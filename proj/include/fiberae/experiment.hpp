#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fiberae/autoencoder.hpp"
#include "fiberae/channel.hpp"
#include "fiberae/conventional.hpp"

namespace fiberae {

/// Bad key, bad value or inconsistent settings. Maps to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Preset { Desk, Full };
enum class SystemKind { Conventional, Autoencoder };

// Config file grammar: one `key = value` per line; `#` starts a comment;
// blank lines are ignored; lists are comma-separated. A power list may also be
// written `start:step:stop` (inclusive). Unknown keys are errors.
struct ExperimentConfig {
  Preset preset = Preset::Desk;
  SystemKind system = SystemKind::Conventional;
  std::string channel = "adn";
  ChannelConfig physics;
  int alphabet_size = 16;
  std::size_t block_symbols = 256;
  std::vector<double> power_dbm;
  std::uint64_t seed = 1;
  std::filesystem::path out = "runs";
  std::size_t eval_blocks = 20;
  std::size_t qam_capacity_samples = 20000;
  bool psd = true;
  std::size_t threads = 0;  // 0: one per hardware thread

  std::size_t span_symbols = 64;
  CdFilter cd_filter = CdFilter::Exact;

  int n_adj = 0;
  long iterations = 2000;
  double learning_rate = 1e-3;
  std::vector<std::size_t> hidden;
  std::size_t shaper_span_symbols = 64;
  long checkpoint_every = 500;

  static ExperimentConfig from_preset(Preset p);

  /// Applies one key. Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  /// Every key with its effective value, in the file grammar.
  std::string resolved() const;
  /// Hash of the settings that affect results (excludes out and threads).
  std::uint64_t hash() const;
  /// `<hash>-s<seed>`.
  std::string run_id() const;
  std::filesystem::path run_dir() const { return out / run_id(); }

  ChannelConfig channel_config() const;
  TrainConfig train_config(double p_dbm) const;
};

/// Receives one progress line; must be callable from worker threads.
using Logger = std::function<void(const std::string&)>;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_config_text(const std::string& text);
KeyValues read_config_file(const std::filesystem::path& file);

/// Preset first (from overrides, else the file, else desk), then file keys,
/// then overrides.
ExperimentConfig build_config(const KeyValues& file_values, const KeyValues& overrides);

struct SweepPoint {
  double p_dbm = 0.0;
  double snr_db = 0.0;
  double mi_bits = 0.0;
  double mi_stderr = 0.0;
  double se = 0.0;
  double ser = 0.0;
  std::uint64_t seed = 0;
  double shannon_bits = 0.0;
  double qam_capacity_bits = 0.0;
  bool diverged = false;
};

struct SweepResult {
  std::filesystem::path dir;
  std::vector<SweepPoint> points;
  bool any_diverged() const;
};

/// Runs every power point on a worker pool and writes se.csv, config.resolved,
/// log.txt and, if enabled, the PSD report into cfg.run_dir(). AE points also
/// get p<P>dBm/ with checkpoint and learned artifacts.
SweepResult run_sweep(const ExperimentConfig& cfg, const Logger& log = {});

/// psd_{x,yo,y}_p<P>dBm.csv for the conventional link at each configured power.
void emit_psd_report(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Learned-artifact report from a checkpoint written for this config.
void emit_learned_report(const ExperimentConfig& cfg, double p_dbm, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& dir);

/// Single AE training run at p_dbm with checkpoints (resumed if present),
/// loss.csv, eval.csv and learned artifacts in `dir`.
TrainResult run_training(const ExperimentConfig& cfg, double p_dbm, const std::filesystem::path& dir,
                         const Logger& log = {});

std::string power_tag(double p_dbm);
void write_resolved(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace fiberae
