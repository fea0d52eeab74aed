#pragma once

#include <cstdint>
#include <span>

#include "fiberae/channel.hpp"
#include "fiberae/signal.hpp"

namespace fiberae {

/// M complex points; index m is the label of points()[m].
class Constellation {
 public:
  /// Square M-QAM with per-axis Gray labeling, normalized to unit mean power.
  /// M must be an even power of two (4, 16, 64, 256, ...).
  static Constellation square_qam(int alphabet_size);
  /// Arbitrary points, optionally rescaled to unit mean power.
  static Constellation from_points(CVec points, bool normalize = true);

  std::span<const cplx> points() const { return points_; }
  cplx point(int index) const { return points_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(points_.size()); }
  double mean_power() const;

 private:
  explicit Constellation(CVec points) : points_(std::move(points)) {}
  CVec points_;
};

/// Label lookup scaled so that the constellation's mean power equals launch_power_w.
CVec qam_map(const SymbolBlock& block, const Constellation& c, double launch_power_w);

/// Truncated sinc taps sinc(k/osf), k in [-span*osf/2, span*osf/2]; centered at
/// index span*osf/2. Unity at the symbol instant, zero at all other multiples of osf.
CVec sinc_taps(std::size_t osf, std::size_t span_symbols);

/// Zero-insertion upsampling followed by circular truncated-sinc filtering.
ComplexSignal sinc_shape(std::span<const cplx> symbols, std::size_t osf, std::size_t span_symbols,
                         double symbol_rate_hz);

/// Time-domain CD compensator with N_CD = floor(|nu|) symbol-spaced taps,
/// nu = 2 pi beta2 l B_w^2. See cd_compensate() for how it is applied.
struct CdCompensator {
  CVec taps;
  double nu = 0.0;
  std::size_t center = 0;

  static CdCompensator design(double beta2, double length_km, double bw_hz);
};

enum class CdFilter {
  Exact,  // all-pass inverse exp(+j/2 beta2 w^2 l) on the circular symbol-rate block
  Fir,    // the N_CD-tap chirp filter of CdCompensator
};

/// Symbol-rate CD compensation (circular). beta2 == 0 is a passthrough.
CVec cd_compensate(std::span<const cplx> y_sam, double beta2, double length_km, double bw_hz,
                   CdFilter mode = CdFilter::Exact);

/// Sample-wise Kerr back-rotation y * exp(+j gamma |y|^2 l).
CVec knl_compensate(std::span<const cplx> y_cd, double gamma, double length_km);

/// Minimum-distance decision against `c` scaled to mean power `scale_w`.
/// Ties go to the lowest index.
SymbolBlock ml_demap(std::span<const cplx> symbols, const Constellation& c, double scale_w);

struct ConventionalOptions {
  std::size_t span_symbols = 64;
  CdFilter cd_filter = CdFilter::Exact;
};

/// Mapper, power scaling, sinc shaping, TX lowpass at B_w/2 and final power
/// normalization to launch_power_w.
ComplexSignal conventional_tx(const SymbolBlock& block, const Constellation& c, double launch_power_w,
                              const ChannelConfig& cfg, const ConventionalOptions& opt = {});

/// ADC output -> downsample -> CD compensation -> Kerr back-rotation (each only if
/// the respective impairment is enabled) -> ML demapping.
struct RxTrace {
  CVec y_sam;
  CVec y_eq;
  SymbolBlock s_hat;
};
RxTrace conventional_rx(const ComplexSignal& y, const Constellation& c, double launch_power_w,
                        const ChannelConfig& cfg, const ConventionalOptions& opt = {});

struct LinkTrace {
  ComplexSignal x;    // TX output
  ComplexSignal y_o;  // fiber output, before ADC
  ComplexSignal y;    // after ADC
  RxTrace rx;
};

LinkTrace conventional_link_trace(const SymbolBlock& block, const Constellation& c,
                                  const ChannelConfig& cfg, double launch_power_w,
                                  std::uint64_t noise_seed, const ConventionalOptions& opt = {});

SymbolBlock conventional_link(const SymbolBlock& block, const Constellation& c,
                              const ChannelConfig& cfg, double launch_power_w,
                              std::uint64_t noise_seed, const ConventionalOptions& opt = {});

}  // namespace fiberae
