#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "fiberae/autoencoder.hpp"
#include "fiberae/conventional.hpp"
#include "fiberae/csv.hpp"
#include "fiberae/rng.hpp"
#include "helpers.hpp"

using namespace fiberae;
using testutil::rel_error;

namespace {

ChannelConfig desk(const std::string& variant) {
  ChannelConfig cfg = with_impairments(ChannelConfig{}, variant);
  cfg.f_sim_hz = 8.0 * cfg.bw_hz;
  cfg.n_ssfm_steps = 50;
  return cfg;
}

TrainConfig small_config(const std::string& variant) {
  TrainConfig tc;
  tc.channel = desk(variant);
  tc.channel.n_ssfm_steps = 10;
  tc.launch_power_w = 1e-4;
  tc.alphabet_size = 16;
  tc.block_symbols = 64;
  tc.hidden = {32, 32};
  tc.shaper_span_symbols = 16;
  tc.iterations = 6;
  tc.eval_blocks = 2;
  tc.seed = 5;
  return tc;
}

SymbolBlock block(std::size_t n, int m, std::uint64_t seed) {
  Rng rng(seed);
  return random_symbols(n, m, rng);
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fiberae_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("autoencoder") {
  TEST_CASE("QAM embedding with sinc shaper reproduces the conventional transmitter") {
    const auto cfg = desk("adn");
    const auto s = block(256, 256, 1);
    const auto params = conventional_tx_params(256, cfg.oversampling(), 64);
    const auto ae = ae_tx(s, params, 1e-3, cfg);
    const auto conv = conventional_tx(s, Constellation::square_qam(256), 1e-3, cfg);
    CHECK(rel_error(ae.samples(), conv.samples()) < 1e-6);
  }

  TEST_CASE("unit-impulse shaper gives the band-limited upsampled symbols") {
    const auto cfg = desk("a");
    const auto s = block(128, 16, 2);
    AeTxParams p;
    p.embedding = ad::Tensor::from_complex(Constellation::square_qam(16).points());
    CVec taps(9, 0.0);
    taps[4] = 1.0;
    p.shaper = ad::Tensor::from_complex(taps);
    const auto x = ae_tx(s, p, 1e-3, cfg);
    const auto sym = qam_map(s, Constellation::square_qam(16), 1.0);
    const auto ref = normalize_power(ideal_lowpass(upsample(sym, cfg.oversampling(), cfg.bw_hz), cfg.bw_hz / 2), 1e-3);
    CHECK(rel_error(x.samples(), ref.samples()) < 1e-12);
  }

  TEST_CASE("launched power equals P for any parameters") {
    const auto cfg = desk("adn");
    std::mt19937_64 eng(3);
    std::normal_distribution<double> d;
    for (int trial = 0; trial < 20; ++trial) {
      AeTxParams p;
      p.embedding = ad::Tensor(16, 2);
      p.shaper = ad::Tensor(2 * 8 * 4 + 1, 2);
      for (auto& v : p.embedding.data) v = d(eng);
      for (auto& v : p.shaper.data) v = d(eng);
      const double pw = dbm_to_watts(-30.0 + 2.0 * trial);
      const auto x = ae_tx(block(64, 16, 10 + trial), p, pw, cfg);
      CHECK(std::abs(x.mean_power() / pw - 1.0) < 1e-10);
    }
  }

  TEST_CASE("receiver input width and probability rows") {
    for (int n_adj : {0, 20}) {
      TrainConfig tc = small_config("a");
      tc.n_adj = n_adj;
      const auto m = init_model(tc);
      CHECK(m.rx.input_dim() == static_cast<std::size_t>(n_adj == 0 ? 2 : 82));
      CHECK(m.rx.layers.front().weight.rows == m.rx.input_dim());
      const ComplexSignal y{testutil::random_cvec(64 * 8, 4, 0.01), tc.channel.f_sim_hz};
      const auto probs = ae_rx(y, m.rx, tc.launch_power_w, tc.channel);
      CHECK(probs.rows == 64);
      CHECK(probs.cols == 16);
      for (std::size_t r = 0; r < probs.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < probs.cols; ++c) {
          CHECK(probs(r, c) >= 0.0);
          s += probs(r, c);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("initial loss is close to ln M") {
    TrainConfig tc = small_config("a");
    tc.block_symbols = 256;
    TrainState st;
    st.model = init_model(tc);
    const double l = train_step(st, tc);
    CHECK(std::abs(l / std::log(16.0) - 1.0) < 0.1);
  }

  TEST_CASE("training is deterministic in the seed") {
    const TrainConfig tc = small_config("adn");
    const auto a = train(tc);
    const auto b = train(tc);
    CHECK(a.state.loss_history == b.state.loss_history);
    CHECK(a.state.model.tx.shaper.data == b.state.model.tx.shaper.data);
    TrainConfig other = tc;
    other.seed = 6;
    CHECK(train(other).state.loss_history != a.state.loss_history);
  }

  TEST_CASE("resuming from a saved state continues bit-identically") {
    const TrainConfig tc = small_config("ad");
    const auto straight = train(tc);
    TrainConfig half = tc;
    half.iterations = 3;
    const auto first = train(half);
    TrainHooks hooks;
    hooks.resume = first.state;
    const auto resumed = train(tc, hooks);
    CHECK(resumed.state.loss_history == straight.state.loss_history);
    CHECK(resumed.state.model.rx.layers.back().weight.data == straight.state.model.rx.layers.back().weight.data);
  }

  TEST_CASE("learning rate halves every quarter") {
    TrainConfig tc;
    tc.iterations = 100;
    tc.learning_rate = 1e-3;
    CHECK(tc.learning_rate_at(0) == 1e-3);
    CHECK(tc.learning_rate_at(24) == 1e-3);
    CHECK(tc.learning_rate_at(25) == 5e-4);
    CHECK(tc.learning_rate_at(99) == 1.25e-4);
  }

  TEST_CASE("noiseless QPSK link is learned") {
    TrainConfig tc;
    tc.channel = desk("a");
    tc.channel.enable_awgn = false;
    tc.alphabet_size = 4;
    tc.launch_power_w = 1e-3;
    tc.iterations = 2000;
    TrainState st;
    st.model = init_model(tc);
    double loss = 1.0;
    while (st.iteration < tc.iterations && loss >= 0.01) loss = train_step(st, tc);
    CHECK(loss < 0.01);
    MESSAGE("reached loss " << loss << " after " << st.iteration << " steps");
  }

  TEST_CASE("evaluation MI never exceeds log2 M") {
    const auto r = train(small_config("a"));
    CHECK(r.evaluation.mi.estimate.mi_bits <= 4.0 + 1e-12);
    CHECK(r.evaluation.se == doctest::Approx(r.evaluation.mi.estimate.mi_bits));
  }

  TEST_CASE("exported artifacts of the conventional transmitter") {
    TrainConfig tc = small_config("ad");
    tc.alphabet_size = 256;
    tc.block_symbols = 256;
    tc.shaper_span_symbols = 64;
    AeModel m = init_model(tc);
    m.tx = conventional_tx_params(256, tc.channel.oversampling(), 64);
    const auto dir = scratch("export");
    export_learned_artifacts(m, tc, dir);

    const auto pts = load_constellation_csv(dir / "emb.csv");
    const auto qam = Constellation::square_qam(256);
    REQUIRE(pts.size() == 256);
    CHECK(testutil::max_abs_diff(pts, qam.points()) < 1e-15);

    // Sinc shaper: exported pulse power follows the Nyquist reference.
    const auto rows = read_csv(dir / "pulse_tx.csv");
    REQUIRE(rows.size() == 256 * tc.channel.oversampling());
    double worst = 0.0;
    for (const auto& r : rows)
      if (std::abs(r[0]) <= 8.0) worst = std::max(worst, std::abs(r[1] - r[3]));
    CHECK(worst < 0.02 * tc.launch_power_w);

    for (const char* f : {"pulse_rx.csv", "psd_ae_x.csv", "psd_ae_yo.csv", "psd_ae_y.csv"})
      CHECK(std::filesystem::exists(dir / f));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("shaper analysis of the exact compensator") {
    const auto cfg = desk("ad");
    const auto sinc = conventional_tx_params(16, cfg.oversampling(), 64);
    const auto plain = analyze_shaper(sinc, cfg, 256);
    CHECK(plain.isi_fraction > 0.5);  // uncompensated dispersion spreads the pulse
    ChannelConfig no_cd = cfg;
    no_cd.enable_cd = false;
    CHECK(analyze_shaper(sinc, no_cd, 256).isi_fraction < 0.05);
  }
}
