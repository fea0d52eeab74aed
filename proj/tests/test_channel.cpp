#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fiberae/channel.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fiberae;
using testutil::random_cvec;
using testutil::rel_error;

namespace {

ChannelConfig quiet(ChannelConfig cfg) {
  cfg.enable_awgn = false;
  return cfg;
}

ComplexSignal gaussian_pulse(std::size_t n, double fs, double t0_s, double power_w) {
  CVec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(n) / 2.0) / fs;
    x[i] = std::sqrt(power_w) * std::exp(-0.5 * t * t / (t0_s * t0_s));
  }
  return {x, fs};
}

}  // namespace

TEST_SUITE("channel") {
  TEST_CASE("cd step leaves DC alone and rotates a 10 GHz tone by -beta2 w^2 dz / 2") {
    const std::size_t n = 1000;
    const double fs = 1e12;
    CVec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(1.0, 2.0 * std::numbers::pi * 10.0 * i / n);
    const auto spec = fft(ComplexSignal{x, fs});
    const auto out = cd_step(spec, -21.67e-24, 5.0);
    // 0.5 * 21.67e-24 * (2 pi 1e10)^2 * 5 = 0.21387 rad.
    const double w = 2.0 * std::numbers::pi * 1e10;
    CHECK(std::arg(out.bins[10] / spec.bins[10]) == doctest::Approx(0.5 * 21.67e-24 * w * w * 5.0).epsilon(1e-12));
    CHECK(std::arg(out.bins[10] / spec.bins[10]) == doctest::Approx(0.21387).epsilon(1e-4));

    const auto dc = fft(ComplexSignal{CVec(n, 1.0), fs});
    CHECK(std::abs(cd_step(dc, -21.67e-24, 5.0).bins[0] - dc.bins[0]) < 1e-15);
    const auto same = cd_step(spec, 0.0, 5.0);
    CHECK(testutil::max_abs_diff(same.bins, spec.bins) == 0.0);
  }

  TEST_CASE("kerr step") {
    const ComplexSignal one{CVec{1.0, 0.0}, 1.0};
    const auto out = knl_step(one, 1.27, 5.0);
    CHECK(std::abs(out.samples()[0] - std::polar(1.0, -6.35)) < 1e-14);
    CHECK(out.samples()[1] == cplx{0.0});
    const ComplexSignal x{random_cvec(64, 1), 1.0};
    CHECK(knl_step(x, 0.0, 5.0).vec() == x.vec());
  }

  TEST_CASE("noise model at the reference parameters") {
    const ChannelConfig cfg;
    const auto nm = NoiseModel::from(cfg);
    CHECK(nm.rho_n == doctest::Approx(1.0 * 6.626e-34 * 193.55e12 * 0.046).epsilon(1e-12));
    CHECK(nm.rho_n == doctest::Approx(5.90e-21).epsilon(2e-3));
    CHECK(nm.sigma2_per_step == doctest::Approx(2.95e-8).epsilon(2e-3));
  }

  TEST_CASE("ase noise step variance") {
    const std::size_t n = 1'000'000;
    const ComplexSignal x{random_cvec(n, 2), 1.0};
    Rng rng(7);
    const double sigma2 = 2.95e-8;
    const auto y = ase_noise_step(x, sigma2, rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::norm(y.samples()[i] - x.samples()[i]);
    CHECK(std::abs(acc / n / sigma2 - 1.0) < 0.01);
    Rng rng2(7);
    CHECK(ase_noise_step(x, 0.0, rng2).vec() == x.vec());
  }

  TEST_CASE("linear propagation equals the closed-form dispersion filter") {
    ChannelConfig cfg = quiet(with_impairments(ChannelConfig{}, "ad"));
    cfg.f_sim_hz = 160e9;
    const ComplexSignal x{random_cvec(512, 3, 1e-2), cfg.f_sim_hz};
    const auto y = ssfm_propagate(x, cfg, 1);
    const auto ref = oracle::closed_form_cd(x.vec(), cfg.f_sim_hz, cfg.beta2_s2_per_km, cfg.length_km);
    CHECK(rel_error(y.samples(), ref) < 1e-9);

    ChannelConfig one = cfg;
    one.n_ssfm_steps = 1;
    CHECK(rel_error(ssfm_propagate(x, one, 1).samples(), y.samples()) < 1e-9);
  }

  TEST_CASE("kerr-only propagation is exact") {
    ChannelConfig cfg = quiet(ChannelConfig{});
    cfg.enable_cd = false;
    cfg.f_sim_hz = 160e9;
    const ComplexSignal x{random_cvec(256, 4, 0.05), cfg.f_sim_hz};
    CVec ref(x.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
      ref[i] = x.samples()[i] * std::polar(1.0, -cfg.gamma_per_w_km * std::norm(x.samples()[i]) * cfg.length_km);
    const auto y = ssfm_propagate(x, cfg, 1);
    CHECK(rel_error(y.samples(), ref) < 1e-10);
    ChannelConfig one = cfg;
    one.n_ssfm_steps = 1;
    CHECK(rel_error(ssfm_propagate(x, one, 1).samples(), y.samples()) < 1e-10);
  }

  TEST_CASE("noiseless propagation preserves energy") {
    ChannelConfig cfg = quiet(ChannelConfig{});
    cfg.f_sim_hz = 160e9;
    cfg.n_ssfm_steps = 50;
    const ComplexSignal x{random_cvec(1024, 5, 0.03), cfg.f_sim_hz};
    const auto y = ssfm_propagate(x, cfg, 1);
    CHECK(std::abs(y.energy() / x.energy() - 1.0) < 1e-10);
  }

  TEST_CASE("all impairments off is the identity") {
    ChannelConfig cfg;
    cfg.enable_awgn = cfg.enable_cd = cfg.enable_knl = false;
    cfg.f_sim_hz = 160e9;
    const ComplexSignal x{random_cvec(128, 6), cfg.f_sim_hz};
    CHECK(ssfm_propagate(x, cfg, 1).vec() == x.vec());
  }

  TEST_CASE("symmetric splitting converges at second order") {
    ChannelConfig cfg = quiet(ChannelConfig{});
    const auto x = gaussian_pulse(4096, cfg.f_sim_hz, 100e-12, 2e-3);
    auto run = [&](int steps) {
      ChannelConfig c = cfg;
      c.n_ssfm_steps = steps;
      return ssfm_propagate(x, c, 1);
    };
    const auto ref = run(160);
    const double e10 = rel_error(run(10).samples(), ref.samples());
    const double e20 = rel_error(run(20).samples(), ref.samples());
    CHECK(e10 / e20 > 3.0);
    CHECK(e10 / e20 < 5.0);
  }

  TEST_CASE("propagation is deterministic in the seed") {
    ChannelConfig cfg;
    cfg.f_sim_hz = 160e9;
    cfg.n_ssfm_steps = 10;
    const ComplexSignal x{random_cvec(256, 8, 0.03), cfg.f_sim_hz};
    CHECK(ssfm_propagate(x, cfg, 42).vec() == ssfm_propagate(x, cfg, 42).vec());
    CHECK(ssfm_propagate(x, cfg, 42).vec() != ssfm_propagate(x, cfg, 43).vec());
  }

  TEST_CASE("converters band-limit to B_w/2") {
    ChannelConfig cfg;
    cfg.f_sim_hz = 160e9;
    CHECK(converter_cutoff_hz(cfg) == 10e9);
    const ComplexSignal x{random_cvec(1600, 9), cfg.f_sim_hz};
    const auto y = adc(dac(x, cfg), cfg);
    const auto spec = fft(y);
    const auto f = frequency_grid(y.size(), y.sample_rate());
    for (std::size_t k = 0; k < f.size(); ++k)
      if (std::abs(f[k]) > 10e9 * (1 + 1e-9)) CHECK(std::abs(spec.bins[k]) < 1e-12);
  }

  TEST_CASE("maximum bandwidth rule of thumb") {
    const ChannelConfig cfg;
    const double b = estimate_max_bandwidth(cfg, 1e-2);
    CHECK(b == doctest::Approx(4.369e11).epsilon(1e-3));
    CHECK(cfg.f_sim_hz > 2.0 * b);
    CHECK(estimate_max_bandwidth(cfg, 2e-2) == doctest::Approx(2.0 * b));
    CHECK(estimate_max_bandwidth(cfg, 1e-12) < 1e-9 * b);
    CHECK_THROWS_AS(estimate_max_bandwidth(cfg, 0.0), std::invalid_argument);
  }

  TEST_CASE("config validation") {
    ChannelConfig cfg;
    cfg.f_sim_hz = 150e9;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ChannelConfig{};
    cfg.n_ssfm_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(with_impairments(ChannelConfig{}, "x"), std::invalid_argument);
  }
}
