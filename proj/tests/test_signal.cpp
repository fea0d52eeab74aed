#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fiberae/fft.hpp"
#include "fiberae/signal.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fiberae;
using testutil::random_cvec;
using testutil::rel_error;

namespace {

ComplexSignal tone(std::size_t n, double fs, double f, double amplitude = 1.0) {
  CVec x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = std::polar(amplitude, 2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return {x, fs};
}

}  // namespace

TEST_SUITE("signal") {
  TEST_CASE("unitary fft of a constant and an impulse") {
    const auto dc = dft::forward(CVec{1, 1, 1, 1});
    CHECK(std::abs(dc[0] - cplx{2.0}) < 1e-15);
    for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(dc[k]) < 1e-15);
    for (cplx v : dft::forward(CVec{1, 0, 0, 0})) CHECK(std::abs(v - cplx{0.5}) < 1e-15);
  }

  TEST_CASE("fft matches the direct dft") {
    for (std::size_t n : {64u, 45u, 7u}) {
      const auto x = random_cvec(n, 11 + n);
      CHECK(rel_error(dft::forward(x), oracle::direct_dft(x, -1)) < 1e-12);
      CHECK(rel_error(dft::inverse(x), oracle::direct_dft(x, +1)) < 1e-12);
    }
  }

  TEST_CASE("parseval and round trip up to 2^17") {
    for (std::size_t n : {std::size_t{64}, std::size_t{1000}, std::size_t{4096}, std::size_t{1} << 17}) {
      const auto x = random_cvec(n, n);
      const auto spec = dft::forward(x);
      CHECK(std::abs(testutil::norm2(spec) / testutil::norm2(x) - 1.0) < 1e-12);
      CHECK(rel_error(dft::inverse(spec), x) < 1e-12);
    }
  }

  TEST_CASE("frequency grid is signed with DC at bin 0") {
    const auto f = frequency_grid(8, 8.0);
    CHECK(f == std::vector<double>{0, 1, 2, 3, -4, -3, -2, -1});
  }

  TEST_CASE("upsample and downsample definitions") {
    const cplx a{1, 2}, b{-3, 0.5}, c{4, 4}, d{0, -1};
    CHECK(upsample(CVec{a, b}, 2) == CVec{a, 0, b, 0});
    CHECK(upsample(CVec{a}, 1) == CVec{a});
    CHECK(downsample(CVec{a, 0, b, 0}, 2, 0) == CVec{a, b});
    CHECK(downsample(CVec{a, b, c, d}, 4, 2) == CVec{c});
    const auto v = random_cvec(33, 3);
    const auto up = upsample(v, 5);
    CHECK(downsample(up, 5, 0) == v);
    CHECK(testutil::norm2(up) == doctest::Approx(testutil::norm2(v)).epsilon(1e-14));
    CHECK_THROWS_AS(downsample(CVec(10), 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(downsample(CVec(9), 3, 3), std::invalid_argument);
  }

  TEST_CASE("upsample is the adjoint of downsample") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto v = random_cvec(16, seed);
      const auto w = random_cvec(64, seed + 100);
      const auto up = upsample(v, 4);
      const auto down = downsample(w, 4, 0);
      cplx lhs = 0.0, rhs = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) lhs += std::conj(up[i]) * w[i];
      for (std::size_t i = 0; i < v.size(); ++i) rhs += std::conj(v[i]) * down[i];
      CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
    }
  }

  TEST_CASE("fir filter identity and circular delay") {
    const auto x = random_cvec(10, 4);
    CHECK(testutil::max_abs_diff(fir_filter(x, CVec{1.0}), x) < 1e-14);
    const cplx a{1, 0}, b{2, 0}, c{3, 0};
    CHECK(testutil::max_abs_diff(fir_filter(CVec{a, b, c}, CVec{0.0, 1.0}), CVec{c, a, b}) < 1e-14);
  }

  TEST_CASE("fir filter matches direct circular convolution") {
    for (std::size_t center : {0u, 3u, 8u}) {
      const auto x = random_cvec(96, 5 + center);
      const auto taps = random_cvec(17, 50 + center);
      const auto y = fir_filter(x, taps, center);
      CHECK(testutil::max_abs_diff(y, oracle::direct_circular_conv(x, taps, center)) < 1e-10);
    }
  }

  TEST_CASE("fir filter is linear") {
    const auto x = random_cvec(128, 6), y = random_cvec(128, 7), taps = random_cvec(9, 8);
    const cplx alpha{0.3, -1.2}, beta{2.0, 0.7};
    CVec mix(128);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x[i] + beta * y[i];
    const auto lhs = fir_filter(mix, taps, 4);
    const auto fx = fir_filter(x, taps, 4), fy = fir_filter(y, taps, 4);
    CVec rhs(128);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = alpha * fx[i] + beta * fy[i];
    CHECK(rel_error(lhs, rhs) < 1e-12);
  }

  TEST_CASE("ideal lowpass") {
    const double fs = 1024.0;
    const ComplexSignal x{random_cvec(1024, 9), fs};
    CHECK(rel_error(ideal_lowpass(x, fs / 2).samples(), x.samples()) < 1e-12);

    const double cutoff = 64.0;
    const auto out = ideal_lowpass(tone(1024, fs, 1.5 * cutoff), cutoff);
    CHECK(testutil::norm2(out.samples()) < 1e-12);

    const auto low = tone(1024, fs, 0.5 * cutoff, 0.7);
    const auto high = tone(1024, fs, 1.5 * cutoff, 0.4);
    CVec both(1024);
    for (std::size_t i = 0; i < both.size(); ++i) both[i] = low.samples()[i] + high.samples()[i];
    const auto kept = ideal_lowpass(ComplexSignal{both, fs}, cutoff);
    CHECK(testutil::max_abs_diff(kept.samples(), low.samples()) < 1e-12);
  }

  TEST_CASE("normalize power") {
    CHECK(normalize_power(CVec{1, 1, 1, 1}, 1.0) == CVec{1, 1, 1, 1});
    const auto two = normalize_power(CVec{2.0, 0.0}, 1.0);
    CHECK(std::abs(two[0] - std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(two[1]) == 0.0);

    const double p = dbm_to_watts(-10.0);
    CHECK(p == doctest::Approx(1e-4).epsilon(1e-14));
    const auto y = normalize_power(random_cvec(500, 10), p);
    CHECK(std::abs(mean_power(y) / 1e-4 - 1.0) < 1e-12);
    CHECK(rel_error(normalize_power(y, p), y) < 1e-12);
    CHECK_THROWS_AS(normalize_power(CVec(4), 1.0), DegenerateInput);
  }

  TEST_CASE("welch psd of a tone peaks at its bin") {
    const double fs = 1e3;
    const auto x = tone(8192, fs, 125.0);
    const auto psd = welch_psd(x, 256);
    const auto peak = std::max_element(psd.psd_db.begin(), psd.psd_db.end()) - psd.psd_db.begin();
    CHECK(psd.freq_hz[static_cast<std::size_t>(peak)] == doctest::Approx(125.0));
    CHECK(psd.psd_db[static_cast<std::size_t>(peak)] == 0.0);
  }

  TEST_CASE("welch psd of white noise is flat") {
    const ComplexSignal x{random_cvec(256 * 201, 12), 1.0};
    const auto psd = welch_psd(x, 512);
    double lo = 0.0, sum = 0.0;
    for (double v : psd.psd_db) lo = std::min(lo, v), sum += v;
    CHECK(lo > -4.0);  // peak-normalized: spread within +-2 dB of the mean level
    const double meanv = sum / static_cast<double>(psd.psd_db.size());
    for (double v : psd.psd_db) CHECK(std::abs(v - meanv) < 2.0);
  }

  TEST_CASE("welch psd resolves a -20 dB second tone") {
    const double fs = 1024.0;
    const auto a = tone(16384, fs, 64.0, 1.0);
    const auto b = tone(16384, fs, -200.0, 0.1);
    CVec x(a.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = a.samples()[i] + b.samples()[i];
    const auto psd = welch_psd(ComplexSignal{x, fs}, 1024);
    auto at = [&](double f) {
      for (std::size_t i = 0; i < psd.freq_hz.size(); ++i)
        if (std::abs(psd.freq_hz[i] - f) < 1e-9) return psd.psd_db[i];
      return 1.0;
    };
    CHECK(at(64.0) == 0.0);
    CHECK(std::abs(at(-200.0) + 20.0) < 0.5);
  }

  TEST_CASE("bandwidth at level counts the outermost bins") {
    PsdEstimate psd{{-2, -1, 0, 1, 2}, {-40, -10, 0, -30, -15}};
    CHECK(bandwidth_at_level(psd, -20.0) == doctest::Approx(4.0));
    CHECK(bandwidth_at_level(psd, -5.0) == doctest::Approx(1.0));
  }

  TEST_CASE("dBm conversion") {
    CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3));
    CHECK(watts_to_dbm(1e-2) == doctest::Approx(10.0));
  }
}
