#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fiberae/signal.hpp"

namespace fiberae {

/// Derives an independent 64-bit seed for substream `stream`/`index` of `seed`
/// (SplitMix64 finalizer). Used so that e.g. SSFM step k always sees the same noise.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// Substream tags.
inline constexpr std::uint64_t kStreamSymbols = 0x53594d42;  // "SYMB"
inline constexpr std::uint64_t kStreamNoise = 0x4e4f4953;    // "NOIS"
inline constexpr std::uint64_t kStreamInit = 0x494e4954;     // "INIT"
inline constexpr std::uint64_t kStreamEval = 0x4556414c;     // "EVAL"

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int uniform_int(int lo, int hi_inclusive) {
    return std::uniform_int_distribution<int>(lo, hi_inclusive)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Circularly-symmetric complex Gaussian samples with total variance `variance`
/// (variance/2 per quadrature).
CVec complex_gaussian(std::size_t n, double variance, Rng& rng);

/// Uniform random labels in {0, ..., alphabet_size - 1}.
SymbolBlock random_symbols(std::size_t n, int alphabet_size, Rng& rng);

}  // namespace fiberae
