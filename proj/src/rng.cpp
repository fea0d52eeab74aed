#include "fiberae/rng.hpp"

#include <cmath>

namespace fiberae {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) + index);
}

CVec complex_gaussian(std::size_t n, double variance, Rng& rng) {
  CVec out(n);
  const double sd = std::sqrt(variance / 2.0);
  for (auto& v : out) {
    const double re = rng.normal();
    const double im = rng.normal();
    v = {sd * re, sd * im};
  }
  return out;
}

SymbolBlock random_symbols(std::size_t n, int alphabet_size, Rng& rng) {
  std::vector<int> idx(n);
  for (auto& i : idx) i = rng.uniform_int(0, alphabet_size - 1);
  return {std::move(idx), alphabet_size};
}

}  // namespace fiberae
