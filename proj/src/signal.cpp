#include "fiberae/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fiberae/fft.hpp"

namespace fiberae {

ComplexSignal::ComplexSignal(CVec samples, double sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_(sample_rate_hz) {
  if (samples_.empty()) throw std::invalid_argument("ComplexSignal: no samples");
  if (!(sample_rate_ > 0.0)) throw std::invalid_argument("ComplexSignal: sample rate must be > 0");
}

double ComplexSignal::energy() const {
  return std::accumulate(samples_.begin(), samples_.end(), 0.0,
                         [](double acc, cplx v) { return acc + std::norm(v); });
}

double ComplexSignal::mean_power() const { return energy() / static_cast<double>(size()); }

SymbolBlock::SymbolBlock(std::vector<int> indices, int alphabet_size)
    : indices_(std::move(indices)), alphabet_size_(alphabet_size) {
  if (alphabet_size_ < 1) throw std::invalid_argument("SymbolBlock: alphabet size must be >= 1");
  for (int i : indices_)
    if (i < 0 || i >= alphabet_size_) throw std::invalid_argument("SymbolBlock: index out of range");
}

Spectrum fft(const ComplexSignal& sig) {
  return {dft::forward(sig.samples()), sig.sample_rate() / static_cast<double>(sig.size())};
}

ComplexSignal ifft(const Spectrum& spec) {
  const double fs = spec.bin_spacing * static_cast<double>(spec.bins.size());
  return {dft::inverse(spec.bins), fs};
}

std::vector<double> frequency_grid(std::size_t n, double sample_rate_hz) {
  std::vector<double> f(n);
  const double df = sample_rate_hz / static_cast<double>(n);
  const std::size_t half = (n + 1) / 2;  // bins [half, n) are negative
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = k < half ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    f[k] = kk * df;
  }
  // Even n: bin n/2 is -fs/2, which the loop above already yields.
  return f;
}

CVec upsample(std::span<const cplx> symbols, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("upsample: factor must be >= 1");
  CVec out(symbols.size() * factor);
  for (std::size_t k = 0; k < symbols.size(); ++k) out[k * factor] = symbols[k];
  return out;
}

ComplexSignal upsample(std::span<const cplx> symbols, std::size_t factor, double symbol_rate_hz) {
  return {upsample(symbols, factor), symbol_rate_hz * static_cast<double>(factor)};
}

CVec downsample(std::span<const cplx> samples, std::size_t factor, std::size_t offset) {
  if (factor == 0) throw std::invalid_argument("downsample: factor must be >= 1");
  if (offset >= factor) throw std::invalid_argument("downsample: offset must be < factor");
  if (samples.size() % factor != 0)
    throw std::invalid_argument("downsample: length not divisible by factor");
  CVec out(samples.size() / factor);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = samples[k * factor + offset];
  return out;
}

CVec downsample(const ComplexSignal& sig, std::size_t factor, std::size_t offset) {
  return downsample(sig.samples(), factor, offset);
}

CVec circular_kernel(std::span<const cplx> taps, std::size_t n, std::size_t center) {
  if (taps.empty()) throw std::invalid_argument("fir_filter: taps must be non-empty");
  if (taps.size() > n) throw std::invalid_argument("fir_filter: more taps than samples");
  if (center >= taps.size()) throw std::invalid_argument("fir_filter: center outside taps");
  CVec kernel(n);
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const std::size_t lag = (k + n - center) % n;
    kernel[lag] += taps[k];
  }
  return kernel;
}

CVec fir_filter(std::span<const cplx> x, std::span<const cplx> taps, std::size_t center) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("fir_filter: empty signal");
  CVec kernel = circular_kernel(taps, n, center);
  CVec xs = dft::forward(x);
  dft::forward_inplace(kernel);
  // With unitary transforms the convolution theorem carries a sqrt(N) factor.
  const double gain = std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) xs[k] *= kernel[k] * gain;
  dft::inverse_inplace(xs);
  return xs;
}

ComplexSignal fir_filter(const ComplexSignal& sig, std::span<const cplx> taps, std::size_t center) {
  return {fir_filter(sig.samples(), taps, center), sig.sample_rate()};
}

std::vector<double> lowpass_mask(std::size_t n, double sample_rate_hz, double cutoff_hz) {
  if (!(cutoff_hz > 0.0)) throw std::invalid_argument("ideal_lowpass: cutoff must be > 0");
  if (cutoff_hz > sample_rate_hz / 2.0 * (1.0 + 1e-12))
    throw std::invalid_argument("ideal_lowpass: cutoff above Nyquist");
  const auto f = frequency_grid(n, sample_rate_hz);
  const double edge = cutoff_hz * (1.0 + 1e-12);
  std::vector<double> mask(n);
  for (std::size_t k = 0; k < n; ++k) mask[k] = std::abs(f[k]) <= edge ? 1.0 : 0.0;
  return mask;
}

ComplexSignal ideal_lowpass(const ComplexSignal& sig, double cutoff_hz) {
  const auto mask = lowpass_mask(sig.size(), sig.sample_rate(), cutoff_hz);
  CVec x = dft::forward(sig.samples());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] *= mask[k];
  dft::inverse_inplace(x);
  return {std::move(x), sig.sample_rate()};
}

double mean_power(std::span<const cplx> x) {
  if (x.empty()) throw std::invalid_argument("mean_power: empty input");
  double acc = 0.0;
  for (cplx v : x) acc += std::norm(v);
  return acc / static_cast<double>(x.size());
}

CVec normalize_power(std::span<const cplx> x, double target_power_w) {
  if (!(target_power_w > 0.0)) throw std::invalid_argument("normalize_power: target must be > 0");
  const double p = mean_power(x);
  if (!(p > 0.0)) throw DegenerateInput("normalize_power: signal has zero energy");
  const double g = std::sqrt(target_power_w / p);
  CVec out(x.begin(), x.end());
  for (auto& v : out) v *= g;
  return out;
}

ComplexSignal normalize_power(const ComplexSignal& sig, double target_power_w) {
  return {normalize_power(sig.samples(), target_power_w), sig.sample_rate()};
}

PsdEstimate welch_psd(const ComplexSignal& sig, std::size_t segment_len, double overlap) {
  if (segment_len == 0) throw std::invalid_argument("welch_psd: segment length must be > 0");
  if (segment_len > sig.size()) throw std::invalid_argument("welch_psd: segment longer than signal");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("welch_psd: overlap must be in [0,1)");

  const std::size_t step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(segment_len) * (1.0 - overlap))));
  std::vector<double> window(segment_len);
  for (std::size_t i = 0; i < segment_len; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(segment_len)));

  std::vector<double> acc(segment_len, 0.0);
  CVec seg(segment_len);
  const auto x = sig.samples();
  for (std::size_t start = 0; start + segment_len <= x.size(); start += step) {
    for (std::size_t i = 0; i < segment_len; ++i) seg[i] = x[start + i] * window[i];
    dft::forward_inplace(seg);
    for (std::size_t i = 0; i < segment_len; ++i) acc[i] += std::norm(seg[i]);
  }

  const auto f = frequency_grid(segment_len, sig.sample_rate());
  const std::size_t shift = segment_len / 2;
  PsdEstimate out;
  out.freq_hz.resize(segment_len);
  out.psd_db.resize(segment_len);
  const double peak = *std::max_element(acc.begin(), acc.end());
  for (std::size_t i = 0; i < segment_len; ++i) {
    const std::size_t src = (i + segment_len - shift) % segment_len;
    out.freq_hz[i] = f[src];
    const double rel = peak > 0.0 ? acc[src] / peak : 0.0;
    out.psd_db[i] = 10.0 * std::log10(std::max(rel, 1e-30));
  }
  return out;
}

double bandwidth_at_level(const PsdEstimate& psd, double level_db) {
  std::size_t first = psd.psd_db.size(), last = 0;
  for (std::size_t i = 0; i < psd.psd_db.size(); ++i) {
    if (psd.psd_db[i] >= level_db) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first > last) return 0.0;
  const double df = psd.freq_hz.size() > 1 ? psd.freq_hz[1] - psd.freq_hz[0] : 0.0;
  return psd.freq_hz[last] - psd.freq_hz[first] + df;
}

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

}  // namespace fiberae
