#include "fiberae/conventional.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fiberae {
namespace {

int gray_to_binary(int g) {
  int b = g;
  while (g >>= 1) b ^= g;
  return b;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Constellation Constellation::square_qam(int alphabet_size) {
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(alphabet_size))));
  if (alphabet_size < 4 || m * m != alphabet_size || !std::has_single_bit(static_cast<unsigned>(m)))
    throw std::invalid_argument("square_qam: M must be a square of a power of two (4, 16, 64, 256, ...)");

  CVec pts(static_cast<std::size_t>(alphabet_size));
  for (int i = 0; i < alphabet_size; ++i) {
    const int li = gray_to_binary(i / m);
    const int lq = gray_to_binary(i % m);
    pts[static_cast<std::size_t>(i)] = {2.0 * li - (m - 1), 2.0 * lq - (m - 1)};
  }
  return from_points(std::move(pts), true);
}

Constellation Constellation::from_points(CVec points, bool normalize) {
  if (points.empty()) throw std::invalid_argument("Constellation: no points");
  if (normalize) points = normalize_power(points, 1.0);
  return Constellation(std::move(points));
}

double Constellation::mean_power() const { return fiberae::mean_power(points_); }

CVec qam_map(const SymbolBlock& block, const Constellation& c, double launch_power_w) {
  if (block.alphabet_size() > c.size())
    throw std::invalid_argument("qam_map: block alphabet larger than constellation");
  const double g = std::sqrt(launch_power_w / c.mean_power());
  CVec out(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) out[i] = g * c.point(block[i]);
  return out;
}

CVec sinc_taps(std::size_t osf, std::size_t span_symbols) {
  if (osf < 1 || span_symbols < 1) throw std::invalid_argument("sinc_taps: osf and span must be >= 1");
  const long half = static_cast<long>(span_symbols * osf / 2);
  CVec taps(static_cast<std::size_t>(2 * half + 1));
  for (long k = -half; k <= half; ++k)
    taps[static_cast<std::size_t>(k + half)] = sinc(static_cast<double>(k) / static_cast<double>(osf));
  return taps;
}

ComplexSignal sinc_shape(std::span<const cplx> symbols, std::size_t osf, std::size_t span_symbols,
                         double symbol_rate_hz) {
  if (osf < 2) throw std::invalid_argument("sinc_shape: osf must be >= 2");
  const ComplexSignal up = upsample(symbols, osf, symbol_rate_hz);
  const CVec taps = sinc_taps(osf, span_symbols);
  if (taps.size() > up.size())
    throw std::invalid_argument("sinc_shape: pulse span longer than the block");
  return fir_filter(up, taps, taps.size() / 2);
}

CdCompensator CdCompensator::design(double beta2, double length_km, double bw_hz) {
  CdCompensator c;
  c.nu = 2.0 * std::numbers::pi * beta2 * length_km * bw_hz * bw_hz;
  const auto n = static_cast<std::size_t>(std::floor(std::abs(c.nu)));
  if (n == 0) {
    c.taps = {cplx{1.0, 0.0}};
    return c;
  }
  c.center = (n - 1) / 2;
  const cplx amp = std::sqrt(cplx{0.0, 1.0} / c.nu);
  c.taps.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = static_cast<double>(k) - static_cast<double>(c.center);
    c.taps[k] = amp * std::polar(1.0, -std::numbers::pi / c.nu * d * d);
  }
  return c;
}

CVec cd_compensate(std::span<const cplx> y_sam, double beta2, double length_km, double bw_hz,
                   CdFilter mode) {
  if (beta2 == 0.0 || y_sam.empty()) return CVec(y_sam.begin(), y_sam.end());
  if (mode == CdFilter::Fir) {
    const auto comp = CdCompensator::design(beta2, length_km, bw_hz);
    return fir_filter(y_sam, comp.taps, comp.center);
  }
  // Inverse of exp(-j/2 beta2 w^2 l) is the same mask evaluated at -l.
  const ComplexSignal sig(CVec(y_sam.begin(), y_sam.end()), bw_hz);
  return ifft(cd_step(fft(sig), beta2, -length_km)).vec();
}

CVec knl_compensate(std::span<const cplx> y_cd, double gamma, double length_km) {
  CVec out(y_cd.begin(), y_cd.end());
  for (auto& v : out) v *= std::polar(1.0, gamma * std::norm(v) * length_km);
  return out;
}

SymbolBlock ml_demap(std::span<const cplx> symbols, const Constellation& c, double scale_w) {
  if (!(scale_w > 0.0)) throw std::invalid_argument("ml_demap: scale must be > 0");
  const double g = std::sqrt(scale_w / c.mean_power());
  CVec ref(c.points().begin(), c.points().end());
  for (auto& p : ref) p *= g;

  std::vector<int> out(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int m = 0; m < c.size(); ++m) {
      const double d = std::norm(symbols[i] - ref[static_cast<std::size_t>(m)]);
      // Relative slack so that exact midpoints tie despite rounding.
      if (d < best * (1.0 - 1e-12)) {
        best = d;
        arg = m;
      }
    }
    out[i] = arg;
  }
  return {std::move(out), c.size()};
}

ComplexSignal conventional_tx(const SymbolBlock& block, const Constellation& c, double launch_power_w,
                              const ChannelConfig& cfg, const ConventionalOptions& opt) {
  const CVec sym = qam_map(block, c, launch_power_w);
  const ComplexSignal shaped = sinc_shape(sym, cfg.oversampling(), opt.span_symbols, cfg.symbol_rate_hz());
  return normalize_power(ideal_lowpass(shaped, converter_cutoff_hz(cfg)), launch_power_w);
}

RxTrace conventional_rx(const ComplexSignal& y, const Constellation& c, double launch_power_w,
                        const ChannelConfig& cfg, const ConventionalOptions& opt) {
  CVec y_sam = downsample(y, cfg.oversampling(), 0);
  CVec y_eq = y_sam;
  if (cfg.enable_cd)
    y_eq = cd_compensate(y_eq, cfg.beta2_s2_per_km, cfg.length_km, cfg.bw_hz, opt.cd_filter);
  if (cfg.enable_knl) y_eq = knl_compensate(y_eq, cfg.gamma_per_w_km, cfg.length_km);
  SymbolBlock s_hat = ml_demap(y_eq, c, launch_power_w);
  return {std::move(y_sam), std::move(y_eq), std::move(s_hat)};
}

LinkTrace conventional_link_trace(const SymbolBlock& block, const Constellation& c,
                                  const ChannelConfig& cfg, double launch_power_w,
                                  std::uint64_t noise_seed, const ConventionalOptions& opt) {
  ComplexSignal x = conventional_tx(block, c, launch_power_w, cfg, opt);
  ComplexSignal y_o = ssfm_propagate(dac(x, cfg), cfg, noise_seed);
  ComplexSignal y = adc(y_o, cfg);
  RxTrace rx = conventional_rx(y, c, launch_power_w, cfg, opt);
  return {std::move(x), std::move(y_o), std::move(y), std::move(rx)};
}

SymbolBlock conventional_link(const SymbolBlock& block, const Constellation& c,
                              const ChannelConfig& cfg, double launch_power_w,
                              std::uint64_t noise_seed, const ConventionalOptions& opt) {
  return conventional_link_trace(block, c, cfg, launch_power_w, noise_seed, opt).rx.s_hat;
}

}  // namespace fiberae
