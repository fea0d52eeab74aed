#include "fiberae/diff_channel.hpp"

#include <stdexcept>

namespace fiberae::ad {
namespace {

CVec converter_mask(std::size_t n, const ChannelConfig& cfg) {
  const auto m = lowpass_mask(n, cfg.f_sim_hz, converter_cutoff_hz(cfg));
  return {m.begin(), m.end()};
}

}  // namespace

Var dac(Var x, const ChannelConfig& cfg) { return spectral_filter(x, converter_mask(x.rows(), cfg)); }

Var adc(Var y, const ChannelConfig& cfg) { return spectral_filter(y, converter_mask(y.rows(), cfg)); }

Var ssfm_propagate(Var x, const ChannelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!x.value().is_complex()) throw std::invalid_argument("ssfm_propagate: expected an (N,2) signal");
  const std::size_t n = x.rows();
  const double dz = cfg.dz_km();
  const double sigma2 = NoiseModel::from(cfg).sigma2_per_step;
  const CVec half_cd = dispersion_mask(n, cfg.f_sim_hz, cfg.beta2_s2_per_km, dz / 2.0);

  Var q = x;
  for (int step = 0; step < cfg.n_ssfm_steps; ++step) {
    if (cfg.enable_cd) q = spectral_filter(q, half_cd);
    if (cfg.enable_knl) q = kerr_phase(q, cfg.gamma_per_w_km * dz);
    if (cfg.enable_cd) q = spectral_filter(q, half_cd);
    if (cfg.enable_awgn && sigma2 > 0.0)
      q = add_constant(q, Tensor::from_complex(ssfm_step_noise(n, sigma2, seed, step)));
  }
  return q;
}

}  // namespace fiberae::ad
