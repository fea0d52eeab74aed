#include "fiberae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fiberae/conventional.hpp"
#include "fiberae/rng.hpp"

namespace fiberae {
namespace {

double entropy_bits(std::span<const double> counts, double total) {
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

struct JointHistogram {
  int m = 0;
  double total = 0.0;
  std::vector<double> joint, row, col;

  explicit JointHistogram(int alphabet)
      : m(alphabet),
        joint(static_cast<std::size_t>(alphabet) * static_cast<std::size_t>(alphabet), 0.0),
        row(static_cast<std::size_t>(alphabet), 0.0),
        col(static_cast<std::size_t>(alphabet), 0.0) {}

  void add(const SymbolBlock& s, const SymbolBlock& s_hat, double weight) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto a = static_cast<std::size_t>(s[i]);
      const auto b = static_cast<std::size_t>(s_hat[i]);
      joint[a * static_cast<std::size_t>(m) + b] += weight;
      row[a] += weight;
      col[b] += weight;
    }
    total += weight * static_cast<double>(s.size());
  }

  MiEstimate mi() const {
    MiEstimate e;
    e.n_samples = static_cast<std::size_t>(std::llround(total));
    if (total <= 0.0) return e;
    e.h_s = entropy_bits(row, total);
    e.h_shat = entropy_bits(col, total);
    e.h_joint = entropy_bits(joint, total);
    e.mi_bits = std::max(0.0, e.h_s + e.h_shat - e.h_joint);
    return e;
  }
};

void check_pair(const SymbolBlock& s, const SymbolBlock& s_hat) {
  if (s.size() != s_hat.size()) throw std::invalid_argument("estimate_mi: length mismatch");
  if (s.alphabet_size() != s_hat.alphabet_size())
    throw std::invalid_argument("estimate_mi: alphabet size mismatch");
}

}  // namespace

MiEstimate estimate_mi(const SymbolBlock& s, const SymbolBlock& s_hat) {
  check_pair(s, s_hat);
  JointHistogram h(s.alphabet_size());
  h.add(s, s_hat, 1.0);
  return h.mi();
}

PooledMi estimate_mi_pooled(std::span<const SymbolBlock> s, std::span<const SymbolBlock> s_hat) {
  if (s.size() != s_hat.size() || s.empty())
    throw std::invalid_argument("estimate_mi_pooled: need equally many non-empty block lists");
  const int m = s.front().alphabet_size();
  JointHistogram all(m);
  for (std::size_t b = 0; b < s.size(); ++b) {
    check_pair(s[b], s_hat[b]);
    all.add(s[b], s_hat[b], 1.0);
  }
  PooledMi out{all.mi(), 0.0};
  const std::size_t nb = s.size();
  if (nb < 2) return out;

  std::vector<double> loo(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    JointHistogram h = all;
    h.add(s[b], s_hat[b], -1.0);
    loo[b] = h.mi().mi_bits;
  }
  double mean = 0.0;
  for (double v : loo) mean += v;
  mean /= static_cast<double>(nb);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  out.std_error = std::sqrt(static_cast<double>(nb - 1) / static_cast<double>(nb) * ss);
  return out;
}

double symbol_error_rate(const SymbolBlock& s, const SymbolBlock& s_hat) {
  check_pair(s, s_hat);
  if (s.size() == 0) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < s.size(); ++i) errors += s[i] != s_hat[i];
  return static_cast<double>(errors) / static_cast<double>(s.size());
}

double spectral_efficiency(double mi_bits, double symbol_duration_s, double bw_hz) {
  if (!(symbol_duration_s > 0.0) || !(bw_hz > 0.0))
    throw std::invalid_argument("spectral_efficiency: T and B_w must be > 0");
  return mi_bits / (symbol_duration_s * bw_hz);
}

double snr(double launch_power_w, const ChannelConfig& cfg) {
  const double rho = NoiseModel::from(cfg).rho_n;
  return launch_power_w / (rho * cfg.length_km * cfg.bw_hz);
}

double snr_db(double launch_power_w, const ChannelConfig& cfg) {
  return 10.0 * std::log10(snr(launch_power_w, cfg));
}

double awgn_capacity(double snr_linear) { return std::log2(1.0 + snr_linear); }

CapacityEstimate qam_symbolwise_capacity(double snr_linear, int alphabet_size, std::size_t n_mc,
                                         std::uint64_t seed) {
  const auto c = Constellation::square_qam(alphabet_size);
  const double log2m = std::log2(static_cast<double>(alphabet_size));
  if (n_mc == 0) throw std::invalid_argument("qam_symbolwise_capacity: n_mc must be > 0");
  if (snr_linear <= 0.0) return {0.0, 0.0};
  if (!std::isfinite(snr_linear)) return {log2m, 0.0};

  // I = log2 M - E[ log2 sum_j exp(-(|x_i - x_j + n|^2 - |n|^2) / N0) ], Es = 1.
  const double n0 = 1.0 / snr_linear;
  Rng rng(derive_seed(seed, kStreamEval, static_cast<std::uint64_t>(alphabet_size)));
  const auto pts = c.points();
  std::vector<double> expo(pts.size());
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t t = 0; t < n_mc; ++t) {
    const int i = rng.uniform_int(0, alphabet_size - 1);
    const cplx noise = std::sqrt(n0 / 2.0) * cplx{rng.normal(), rng.normal()};
    const cplx xi = pts[static_cast<std::size_t>(i)];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      expo[j] = -(std::norm(xi - pts[j] + noise) - std::norm(noise)) / n0;
      mx = std::max(mx, expo[j]);
    }
    double acc = 0.0;
    for (double e : expo) acc += std::exp(e - mx);
    const double term = (mx + std::log(acc)) / std::log(2.0);
    sum += term;
    sum2 += term * term;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return {log2m - mean, std::sqrt(var / n)};
}

}  // namespace fiberae
