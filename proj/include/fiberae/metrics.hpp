#pragma once

#include <cstdint>
#include <span>

#include "fiberae/channel.hpp"
#include "fiberae/signal.hpp"

namespace fiberae {

struct MiEstimate {
  double mi_bits = 0.0;
  std::size_t n_samples = 0;
  double h_s = 0.0;
  double h_shat = 0.0;
  double h_joint = 0.0;
};

/// Plug-in MI from the empirical joint histogram of sent and decided labels,
/// MI = H(s) + H(s_hat) - H(s, s_hat), with 0 log 0 := 0. No bias correction.
MiEstimate estimate_mi(const SymbolBlock& s, const SymbolBlock& s_hat);

/// Pooled plug-in MI over several blocks plus its delete-one-block jackknife
/// standard error.
struct PooledMi {
  MiEstimate estimate;
  double std_error = 0.0;
};
PooledMi estimate_mi_pooled(std::span<const SymbolBlock> s, std::span<const SymbolBlock> s_hat);

double symbol_error_rate(const SymbolBlock& s, const SymbolBlock& s_hat);

/// SE = MI / (T * B_w).
double spectral_efficiency(double mi_bits, double symbol_duration_s, double bw_hz);

/// P / (rho_n * l * B_w), linear.
double snr(double launch_power_w, const ChannelConfig& cfg);
double snr_db(double launch_power_w, const ChannelConfig& cfg);

double awgn_capacity(double snr_linear);

struct CapacityEstimate {
  double bits = 0.0;
  double std_error = 0.0;
};

/// Symbol-wise MI of equiprobable square M-QAM over complex AWGN (Es/N0 = snr),
/// Monte Carlo over n_mc draws.
CapacityEstimate qam_symbolwise_capacity(double snr_linear, int alphabet_size, std::size_t n_mc,
                                         std::uint64_t seed = 1);

}  // namespace fiberae
