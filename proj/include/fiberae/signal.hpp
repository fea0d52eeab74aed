#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fiberae {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

/// Raised when an input has no usable energy (e.g. normalizing an all-zero block).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Uniformly sampled complex baseband waveform. |sample|^2 is in watts.
class ComplexSignal {
 public:
  ComplexSignal(CVec samples, double sample_rate_hz);

  std::span<const cplx> samples() const { return samples_; }
  std::span<cplx> samples() { return samples_; }
  const CVec& vec() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double sample_rate() const { return sample_rate_; }

  double energy() const;
  double mean_power() const;

 private:
  CVec samples_;
  double sample_rate_;
};

/// Block of symbol labels in {0, ..., alphabet_size - 1}.
class SymbolBlock {
 public:
  SymbolBlock(std::vector<int> indices, int alphabet_size);

  std::span<const int> indices() const { return indices_; }
  int operator[](std::size_t i) const { return indices_[i]; }
  std::size_t size() const { return indices_.size(); }
  int alphabet_size() const { return alphabet_size_; }

 private:
  std::vector<int> indices_;
  int alphabet_size_;
};

/// Unitary DFT of a ComplexSignal. Bin k holds frequency k*bin_spacing for
/// k < N/2 and (k-N)*bin_spacing otherwise.
struct Spectrum {
  CVec bins;
  double bin_spacing;
};

Spectrum fft(const ComplexSignal& sig);
ComplexSignal ifft(const Spectrum& spec);

/// Signed baseband frequency of every DFT bin, in [-fs/2, fs/2).
std::vector<double> frequency_grid(std::size_t n, double sample_rate_hz);

CVec upsample(std::span<const cplx> symbols, std::size_t factor);
ComplexSignal upsample(std::span<const cplx> symbols, std::size_t factor,
                       double symbol_rate_hz);
CVec downsample(std::span<const cplx> samples, std::size_t factor, std::size_t offset);
CVec downsample(const ComplexSignal& sig, std::size_t factor, std::size_t offset);

/// Places `taps` on a length-n circular grid so that tap `center` sits at lag 0.
CVec circular_kernel(std::span<const cplx> taps, std::size_t n, std::size_t center);

/// Circular convolution over the block: y[i] = sum_k taps[k] * x[(i - k + center) mod N].
ComplexSignal fir_filter(const ComplexSignal& sig, std::span<const cplx> taps,
                         std::size_t center = 0);
CVec fir_filter(std::span<const cplx> x, std::span<const cplx> taps, std::size_t center = 0);

/// Brickwall lowpass: bins with |f| <= cutoff pass unchanged, the rest are zeroed.
ComplexSignal ideal_lowpass(const ComplexSignal& sig, double cutoff_hz);
std::vector<double> lowpass_mask(std::size_t n, double sample_rate_hz, double cutoff_hz);

ComplexSignal normalize_power(const ComplexSignal& sig, double target_power_w);
CVec normalize_power(std::span<const cplx> x, double target_power_w);

double mean_power(std::span<const cplx> x);

struct PsdEstimate {
  std::vector<double> freq_hz;  // ascending, DC in the middle
  std::vector<double> psd_db;   // peak bin is exactly 0 dB
};

/// Welch estimate with a periodic Hann window, averaged over overlapping
/// segments, FFT-shifted and peak-normalized.
PsdEstimate welch_psd(const ComplexSignal& sig, std::size_t segment_len = 2048,
                      double overlap = 0.5);

/// Two-sided width between the outermost bins at or above `level_db`.
double bandwidth_at_level(const PsdEstimate& psd, double level_db);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

}  // namespace fiberae
