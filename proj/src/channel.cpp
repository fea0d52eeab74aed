#include "fiberae/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fiberae/fft.hpp"

namespace fiberae {

std::size_t ChannelConfig::oversampling() const {
  const double ratio = f_sim_hz / bw_hz;
  return static_cast<std::size_t>(std::llround(ratio));
}

void ChannelConfig::validate() const {
  if (!(length_km > 0.0)) throw std::invalid_argument("channel: length_km must be > 0");
  if (n_ssfm_steps < 1) throw std::invalid_argument("channel: n_ssfm_steps must be >= 1");
  if (!(f_sim_hz > 0.0) || !(bw_hz > 0.0)) throw std::invalid_argument("channel: rates must be > 0");
  const double ratio = f_sim_hz / bw_hz;
  if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw std::invalid_argument("channel: f_sim must be an integer multiple of the symbol rate");
  if (n_sp < 0.0 || alpha_per_km < 0.0) throw std::invalid_argument("channel: negative noise parameter");
}

ChannelConfig with_impairments(ChannelConfig cfg, const std::string& variant) {
  if (variant == "a") {
    cfg.enable_awgn = true, cfg.enable_cd = false, cfg.enable_knl = false;
  } else if (variant == "ad") {
    cfg.enable_awgn = true, cfg.enable_cd = true, cfg.enable_knl = false;
  } else if (variant == "adn") {
    cfg.enable_awgn = true, cfg.enable_cd = true, cfg.enable_knl = true;
  } else {
    throw std::invalid_argument("unknown channel variant '" + variant + "' (expected a|ad|adn)");
  }
  return cfg;
}

NoiseModel NoiseModel::from(const ChannelConfig& cfg) {
  const double rho = cfg.n_sp * cfg.planck * cfg.f0_hz * cfg.alpha_per_km;
  return {rho, rho * cfg.dz_km() * cfg.f_sim_hz};
}

CVec dispersion_mask(std::size_t n, double sample_rate_hz, double beta2, double dz_km) {
  const auto f = frequency_grid(n, sample_rate_hz);
  CVec mask(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 2.0 * std::numbers::pi * f[k];
    mask[k] = std::polar(1.0, -0.5 * beta2 * w * w * dz_km);
  }
  return mask;
}

Spectrum cd_step(const Spectrum& spec, double beta2, double dz_km) {
  const std::size_t n = spec.bins.size();
  const auto mask = dispersion_mask(n, spec.bin_spacing * static_cast<double>(n), beta2, dz_km);
  Spectrum out = spec;
  for (std::size_t k = 0; k < n; ++k) out.bins[k] *= mask[k];
  return out;
}

ComplexSignal knl_step(const ComplexSignal& sig, double gamma, double dz_km) {
  CVec out(sig.samples().begin(), sig.samples().end());
  for (auto& q : out) q *= std::polar(1.0, -gamma * std::norm(q) * dz_km);
  return {std::move(out), sig.sample_rate()};
}

ComplexSignal ase_noise_step(const ComplexSignal& sig, double sigma2, Rng& rng) {
  if (sigma2 < 0.0) throw std::invalid_argument("ase_noise_step: negative variance");
  CVec out(sig.samples().begin(), sig.samples().end());
  if (sigma2 == 0.0) return {std::move(out), sig.sample_rate()};
  const CVec n = complex_gaussian(out.size(), sigma2, rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += n[i];
  return {std::move(out), sig.sample_rate()};
}

CVec ssfm_step_noise(std::size_t n, double sigma2, std::uint64_t seed, int step) {
  Rng rng(derive_seed(seed, kStreamNoise, static_cast<std::uint64_t>(step)));
  return complex_gaussian(n, sigma2, rng);
}

ComplexSignal ssfm_propagate(const ComplexSignal& sig, const ChannelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (std::abs(sig.sample_rate() - cfg.f_sim_hz) > 1e-9 * cfg.f_sim_hz)
    throw std::invalid_argument("ssfm_propagate: signal sample rate differs from f_sim");

  const std::size_t n = sig.size();
  const double dz = cfg.dz_km();
  const double sigma2 = NoiseModel::from(cfg).sigma2_per_step;
  const CVec half_cd = dispersion_mask(n, cfg.f_sim_hz, cfg.beta2_s2_per_km, dz / 2.0);

  CVec q(sig.samples().begin(), sig.samples().end());
  auto apply_cd = [&] {
    dft::forward_inplace(q);
    for (std::size_t k = 0; k < n; ++k) q[k] *= half_cd[k];
    dft::inverse_inplace(q);
  };

  for (int step = 0; step < cfg.n_ssfm_steps; ++step) {
    if (cfg.enable_cd) apply_cd();
    if (cfg.enable_knl)
      for (auto& v : q) v *= std::polar(1.0, -cfg.gamma_per_w_km * std::norm(v) * dz);
    if (cfg.enable_cd) apply_cd();
    if (cfg.enable_awgn && sigma2 > 0.0) {
      const CVec noise = ssfm_step_noise(n, sigma2, seed, step);
      for (std::size_t i = 0; i < n; ++i) q[i] += noise[i];
    }
  }
  return {std::move(q), sig.sample_rate()};
}

double converter_cutoff_hz(const ChannelConfig& cfg) { return cfg.bw_hz / 2.0; }

ComplexSignal dac(const ComplexSignal& sig, const ChannelConfig& cfg) {
  return ideal_lowpass(sig, converter_cutoff_hz(cfg));
}

ComplexSignal adc(const ComplexSignal& sig, const ChannelConfig& cfg) {
  return ideal_lowpass(sig, converter_cutoff_hz(cfg));
}

double estimate_max_bandwidth(const ChannelConfig& cfg, double p_max_w) {
  if (!(p_max_w > 0.0)) throw std::invalid_argument("estimate_max_bandwidth: p_max must be > 0");
  return 0.86 * cfg.gamma_per_w_km * (2.0 * p_max_w) * cfg.length_km * cfg.bw_hz;
}

}  // namespace fiberae
