#pragma once

#include <cstdint>
#include <string>

#include "fiberae/rng.hpp"
#include "fiberae/signal.hpp"

namespace fiberae {

/// Physical and simulation parameters of the single-polarization fiber link.
/// Units: beta2 in s^2/km, gamma in 1/(W km), alpha in 1/km, lengths in km.
/// Defaults are the reference long-haul setup (1000 km SSMF-like fiber,
/// 20 GHz transceivers, 1 THz simulation rate).
struct ChannelConfig {
  double planck = 6.626e-34;
  double f0_hz = 193.55e12;
  double alpha_per_km = 0.046;
  double beta2_s2_per_km = -21.67e-24;
  double gamma_per_w_km = 1.27;
  double n_sp = 1.0;
  double length_km = 1000.0;
  int n_ssfm_steps = 200;
  double f_sim_hz = 1e12;
  double bw_hz = 20e9;

  bool enable_awgn = true;
  bool enable_cd = true;
  bool enable_knl = true;

  double dz_km() const { return length_km / n_ssfm_steps; }
  double symbol_rate_hz() const { return bw_hz; }
  /// Samples per symbol, f_sim / R_s.
  std::size_t oversampling() const;
  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;
};

/// Selects the impairment set: "a" (AWGN), "ad" (+CD), "adn" (+Kerr).
ChannelConfig with_impairments(ChannelConfig cfg, const std::string& variant);

struct NoiseModel {
  double rho_n;            // W/(Hz km)
  double sigma2_per_step;  // W per complex sample

  static NoiseModel from(const ChannelConfig& cfg);
};

/// Dispersion phase factor exp(-j/2 beta2 w^2 dz) on the signed DFT frequency grid.
CVec dispersion_mask(std::size_t n, double sample_rate_hz, double beta2, double dz_km);

Spectrum cd_step(const Spectrum& spec, double beta2, double dz_km);
ComplexSignal knl_step(const ComplexSignal& sig, double gamma, double dz_km);
ComplexSignal ase_noise_step(const ComplexSignal& sig, double sigma2, Rng& rng);

/// Noise injected after SSFM step `step` for a propagation seeded with `seed`.
CVec ssfm_step_noise(std::size_t n, double sigma2, std::uint64_t seed, int step);

/// Symmetric split-step propagation over the whole fiber. Per step:
/// half CD, full Kerr, half CD, then ASE. Disabled impairments are skipped.
ComplexSignal ssfm_propagate(const ComplexSignal& sig, const ChannelConfig& cfg, std::uint64_t seed);

ComplexSignal dac(const ComplexSignal& sig, const ChannelConfig& cfg);
ComplexSignal adc(const ComplexSignal& sig, const ChannelConfig& cfg);
/// LPF edge used by both converters: two-sided bandwidth B_w, i.e. |f| <= B_w/2.
double converter_cutoff_hz(const ChannelConfig& cfg);

/// Rule-of-thumb peak bandwidth under Kerr broadening: 0.86*gamma*(2 P_max)*l*B_w.
double estimate_max_bandwidth(const ChannelConfig& cfg, double p_max_w);

}  // namespace fiberae
