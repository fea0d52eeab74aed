#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "fiberae/signal.hpp"

namespace testutil {

inline fiberae::CVec random_cvec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> d(0.0, scale);
  fiberae::CVec v(n);
  for (auto& z : v) z = {d(eng), d(eng)};
  return v;
}

inline double norm2(std::span<const fiberae::cplx> x) {
  double s = 0.0;
  for (auto z : x) s += std::norm(z);
  return std::sqrt(s);
}

inline double rel_error(std::span<const fiberae::cplx> a, std::span<const fiberae::cplx> b) {
  double e = 0.0, r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e += std::norm(a[i] - b[i]);
    r += std::norm(b[i]);
  }
  return std::sqrt(e / r);
}

inline double max_abs_diff(std::span<const fiberae::cplx> a, std::span<const fiberae::cplx> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
