#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "fiberae/autodiff.hpp"
#include "fiberae/autoencoder.hpp"
#include "fiberae/conventional.hpp"
#include "fiberae/diff_channel.hpp"
#include "fiberae/rng.hpp"
#include "oracles.hpp"

using namespace fiberae;
using namespace fiberae::ad;

namespace {

Tensor random_tensor(std::mt19937_64& eng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(r, c);
  for (auto& v : t.data) v = d(eng);
  return t;
}

Var project(Var y, const Tensor& w) { return sum(mul(y, y.tape().constant(w))); }

struct Primitive {
  std::string name;
  std::function<double(std::uint64_t)> check;  // max relative error for one seed
};

// Every primitive on fresh random inputs drawn from `seed`.
std::vector<Primitive> primitives() {
  auto make = [](std::size_t rows, std::size_t cols, double lo, double hi,
                 std::function<Var(Tape&, Var, std::mt19937_64&)> body) {
    return [=](std::uint64_t seed) {
      std::mt19937_64 eng(seed);
      const Tensor x0 = random_tensor(eng, rows, cols, lo, hi);
      const std::uint64_t inner = eng();
      return grad_check(
                 [=](Tape& t, Var x) {
                   std::mt19937_64 e(inner);
                   return body(t, x, e);
                 },
                 x0)
          .max_rel_error;
    };
  };
  auto proj = [](Var y, std::mt19937_64& e) { return project(y, random_tensor(e, y.rows(), y.cols())); };
  const std::size_t n = 12;
  std::vector<Primitive> p;
  p.push_back({"add", make(n, 2, -1, 1, [=](Tape& t, Var x, auto& e) { return proj(add(x, t.constant(random_tensor(e, n, 2))), e); })});
  p.push_back({"sub", make(n, 2, -1, 1, [=](Tape& t, Var x, auto& e) { return proj(sub(t.constant(random_tensor(e, n, 2)), x), e); })});
  p.push_back({"mul", make(n, 2, -1, 1, [=](Tape& t, Var x, auto& e) { return proj(mul(x, t.constant(random_tensor(e, n, 2))), e); })});
  p.push_back({"scale", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(scale(x, 2.3), e); })});
  p.push_back({"add_constant", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(add_constant(x, random_tensor(e, n, 2)), e); })});
  p.push_back({"rsqrt", make(n, 1, 0.3, 3, [=](Tape&, Var x, auto& e) { return proj(rsqrt(x), e); })});
  p.push_back({"sum", make(n, 2, -1, 1, [=](Tape&, Var x, auto&) { return sum(mul(x, x)); })});
  p.push_back({"mean", make(n, 2, -1, 1, [=](Tape&, Var x, auto&) { return mean(mul(x, x)); })});
  p.push_back({"cmul", make(n, 2, -1, 1, [=](Tape& t, Var x, auto& e) { return proj(cmul(x, t.constant(random_tensor(e, n, 2))), e); })});
  p.push_back({"cmul_const", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) {
                 return proj(cmul_const(x, random_tensor(e, n, 2).to_complex()), e);
               })});
  p.push_back({"rmul_const", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) {
                 return proj(rmul_const(x, random_tensor(e, n, 1).data), e);
               })});
  p.push_back({"cexp_i", make(n, 1, -3, 3, [=](Tape&, Var x, auto& e) { return proj(cexp_i(x), e); })});
  p.push_back({"abs2", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(abs2(x), e); })});
  p.push_back({"fft", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(fft(x), e); })});
  p.push_back({"ifft", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(ifft(x), e); })});
  p.push_back({"circular_conv_x", make(n, 2, -1, 1, [=](Tape& t, Var x, auto& e) {
                 return proj(circular_conv(x, t.constant(random_tensor(e, 5, 2)), 2), e);
               })});
  p.push_back({"circular_conv_taps", make(5, 2, -1, 1, [=](Tape& t, Var k, auto& e) {
                 return proj(circular_conv(t.constant(random_tensor(e, n, 2)), k, 3), e);
               })});
  p.push_back({"upsample", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(upsample(x, 3), e); })});
  p.push_back({"downsample", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(downsample(x, 3, 1), e); })});
  p.push_back({"spectral_filter", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) {
                 return proj(spectral_filter(x, random_tensor(e, n, 2).to_complex()), e);
               })});
  p.push_back({"kerr_phase", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(kerr_phase(x, 0.7), e); })});
  p.push_back({"power_normalize", make(n, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(power_normalize(x, 1.5), e); })});
  p.push_back({"matmul_lhs", make(5, 4, -1, 1, [=](Tape& t, Var x, auto& e) {
                 return proj(matmul(x, t.constant(random_tensor(e, 4, 3))), e);
               })});
  p.push_back({"matmul_rhs", make(4, 3, -1, 1, [=](Tape& t, Var w, auto& e) {
                 return proj(matmul(t.constant(random_tensor(e, 5, 4)), w), e);
               })});
  p.push_back({"add_bias_input", make(5, 3, -1, 1, [=](Tape& t, Var x, auto& e) {
                 return proj(add_bias(x, t.constant(random_tensor(e, 1, 3))), e);
               })});
  p.push_back({"add_bias", make(1, 3, -1, 1, [=](Tape& t, Var b, auto& e) {
                 return proj(add_bias(t.constant(random_tensor(e, 5, 3)), b), e);
               })});
  p.push_back({"elu", make(6, 4, -2, 2, [=](Tape&, Var x, auto& e) { return proj(elu(x), e); })});
  p.push_back({"softmax_cross_entropy", make(6, 4, -3, 3, [=](Tape&, Var x, auto& e) {
                 std::vector<int> labels(6);
                 for (auto& l : labels) l = static_cast<int>(e() % 4);
                 return softmax_cross_entropy(x, labels);
               })});
  p.push_back({"gather_rows", make(6, 2, -1, 1, [=](Tape&, Var x, auto& e) {
                 std::vector<std::size_t> rows(9);
                 for (auto& r : rows) r = e() % 6;
                 return proj(gather_rows(x, rows), e);
               })});
  p.push_back({"reshape", make(6, 2, -1, 1, [=](Tape&, Var x, auto& e) { return proj(reshape(x, 3, 4), e); })});
  return p;
}

// Shared subexpressions: x feeds three paths.
Var composite(Tape& t, Var x) {
  const CVec mask{{1, 0}, {0.5, 0.5}, {0, 1}, {-0.3, 0.2}, {1, 1}, {0.2, -0.7}, {0.9, 0.1}, {-1, 0}};
  Var y = kerr_phase(spectral_filter(x, mask), 0.5);
  Var z = power_normalize(add(y, x), 2.0);
  Var w = t.constant(Tensor(8, 1, std::vector<double>{0.3, -1.2, 0.8, 0.1, 2.0, -0.4, 0.6, 1.1}));
  return add(sum(mul(abs2(z), w)), mean(cmul(x, z)));
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("gradient of sum is all ones") {
    Tape t;
    Var x = t.leaf(Tensor(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6}));
    t.backward(sum(x));
    for (double g : t.grad(x).data) CHECK(g == 1.0);
  }

  TEST_CASE("gradient of the spectral energy is 2x") {
    std::mt19937_64 eng(1);
    Tape t;
    const Tensor x0 = random_tensor(eng, 32, 2);
    Var x = t.leaf(x0);
    t.backward(sum(abs2(fft(x))));
    const Tensor g = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g.data[i] - 2.0 * x0.data[i]) < 1e-12);
  }

  TEST_CASE("grad_check of a linear program sits at the rounding floor") {
    std::mt19937_64 eng(2);
    const Tensor w = random_tensor(eng, 10, 2);
    const auto r = grad_check([&](Tape& t, Var x) { return sum(mul(x, t.constant(w))); }, random_tensor(eng, 10, 2));
    CHECK(r.max_rel_error < 1e-9);
  }

  TEST_CASE("every primitive passes finite differences over 100 seeds") {
    for (const auto& p : primitives()) {
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) worst = std::max(worst, p.check(seed));
      INFO(p.name);
      CHECK(worst < 1e-5);
    }
  }

  TEST_CASE("composite graph with fan-out matches central differences") {
    std::mt19937_64 eng(3);
    const Tensor x0 = random_tensor(eng, 8, 2);
    Tape t;
    Var x = t.leaf(x0);
    t.backward(composite(t, x));
    const Tensor g = t.grad(x);
    const auto fd = oracle::central_gradient(
        [](const std::vector<double>& v) {
          Tape tt;
          Var xx = tt.leaf(Tensor(8, 2, v), false);
          return composite(tt, xx).value().data[0];
        },
        x0.data, 1e-6);
    double scale = 0.0;
    for (double v : fd) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < fd.size(); ++i)
      CHECK(std::abs(g.data[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-3 * scale) < 1e-5);
  }

  TEST_CASE("fan-out accumulates both paths") {
    Tape t;
    Var x = t.leaf(Tensor(2, 1, std::vector<double>{3.0, -2.0}));
    t.backward(sum(mul(x, x)));
    CHECK(t.grad(x).data == std::vector<double>{6.0, -4.0});
  }

  TEST_CASE("softmax cross-entropy gradient is softmax minus one-hot") {
    std::mt19937_64 eng(4);
    const Tensor logits = random_tensor(eng, 5, 4, -3, 3);
    const std::vector<int> labels{0, 3, 1, 1, 2};
    Tape t;
    Var z = t.leaf(logits);
    Var loss = softmax_cross_entropy(z, labels);
    t.backward(loss);
    const Tensor p = softmax_rows(logits);
    const Tensor g = t.grad(z);
    double ce = 0.0;
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 4; ++c) s += p(r, c);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
      ce -= std::log(p(r, static_cast<std::size_t>(labels[r])));
      for (std::size_t c = 0; c < 4; ++c) {
        const double onehot = static_cast<int>(c) == labels[r] ? 1.0 : 0.0;
        CHECK(std::abs(g(r, c) - (p(r, c) - onehot) / 5.0) < 1e-14);
      }
    }
    CHECK(loss.value().data[0] == doctest::Approx(ce / 5.0).epsilon(1e-13));
  }

  TEST_CASE("softmax cross-entropy is stable for large logits") {
    Tape t;
    Var z = t.leaf(Tensor(1, 3, std::vector<double>{1000.0, 0.0, -1000.0}));
    Var loss = softmax_cross_entropy(z, std::vector<int>{0});
    CHECK(std::isfinite(loss.value().data[0]));
    CHECK(loss.value().data[0] < 1e-12);
  }

  TEST_CASE("tape replay is bit-identical") {
    std::mt19937_64 eng(5);
    const Tensor x0 = random_tensor(eng, 8, 2);
    auto run = [&] {
      Tape t;
      Var x = t.leaf(x0);
      Var loss = composite(t, x);
      t.backward(loss);
      return std::make_pair(loss.value().data[0], t.grad(x).data);
    };
    CHECK(run() == run());
  }

  TEST_CASE("transmitter gradients") {
    ChannelConfig ch;
    ch.f_sim_hz = 4.0 * ch.bw_hz;
    std::mt19937_64 eng(6);
    Rng srng(7);
    const SymbolBlock s = random_symbols(16, 16, srng);
    const Tensor w0 = random_tensor(eng, 16, 2);
    Tensor f0 = Tensor::from_complex(sinc_taps(4, 4));
    for (auto& v : f0.data) v += 0.1 * std::uniform_real_distribution<double>(-1, 1)(eng);
    const Tensor dir = random_tensor(eng, 64, 2);
    auto loss = [&](Var w, Var f) { return project(scale(ae_tx(w, f, s, 1e-3, ch), std::sqrt(1e3)), dir); };
    CHECK(grad_check([&](Tape& t, Var w) { return loss(w, t.constant(f0)); }, w0).max_rel_error < 1e-5);
    CHECK(grad_check([&](Tape& t, Var f) { return loss(t.constant(w0), f); }, f0).max_rel_error < 1e-5);
  }

  TEST_CASE("four-step split-step gradient on 64 samples") {
    ChannelConfig ch;
    ch.f_sim_hz = 4.0 * ch.bw_hz;
    ch.n_ssfm_steps = 4;
    std::mt19937_64 eng(8);
    Tensor x0 = random_tensor(eng, 64, 2, -0.05, 0.05);
    const Tensor dir = random_tensor(eng, 64, 2);
    const auto r = grad_check(
        [&](Tape&, Var x) { return project(scale(ssfm_propagate(x, ch, 11), 20.0), dir); }, x0);
    CHECK(r.max_rel_error < 1e-4);
  }

  TEST_CASE("Adam leaves parameters alone under zero gradient") {
    std::vector<Tensor> params{Tensor(3, 1, std::vector<double>{1, -2, 3})};
    const std::vector<Tensor> grads{Tensor(3, 1)};
    AdamState st;
    for (int i = 0; i < 10; ++i) adam_update(params, grads, st, {});
    CHECK(params[0].data == std::vector<double>{1, -2, 3});
    CHECK(st.step == 10);
  }

  TEST_CASE("Adam steps are bounded by the learning rate") {
    std::vector<Tensor> params{Tensor(4, 1, std::vector<double>{0, 0, 0, 0})};
    const std::vector<Tensor> grads{Tensor(4, 1, std::vector<double>{1e-6, -3.0, 250.0, 1.0})};
    AdamState st;
    AdamOptions opt;
    opt.learning_rate = 0.01;
    for (int i = 0; i < 200; ++i) {
      const auto before = params[0].data;
      adam_update(params, grads, st, opt);
      for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(params[0].data[k] - before[k]) <= 0.01 * (1 + 1e-6));
    }
  }

  TEST_CASE("Adam minimizes a quadratic bowl") {
    const std::vector<double> a{1.0, 4.0, 0.25, 10.0};
    std::vector<Tensor> params{Tensor(4, 1, std::vector<double>{1.0, -1.0, 2.0, 0.5})};
    AdamState st;
    AdamOptions opt;
    opt.learning_rate = 1e-2;
    auto f = [&] {
      double v = 0.0;
      for (std::size_t i = 0; i < 4; ++i) v += a[i] * params[0].data[i] * params[0].data[i];
      return v;
    };
    int steps = 0;
    while (f() >= 1e-6 && steps < 5000) {
      std::vector<Tensor> g{Tensor(4, 1)};
      for (std::size_t i = 0; i < 4; ++i) g[0].data[i] = 2.0 * a[i] * params[0].data[i];
      adam_update(params, g, st, opt);
      ++steps;
    }
    CHECK(f() < 1e-6);
    CHECK(steps <= 5000);
  }

  TEST_CASE("global norm clipping") {
    std::vector<Tensor> g{Tensor(1, 2, std::vector<double>{3, 0}), Tensor(1, 1, std::vector<double>{4})};
    CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
    CHECK(g[0].data[0] == doctest::Approx(0.6));
    CHECK(g[1].data[0] == doctest::Approx(0.8));
    std::vector<Tensor> small{Tensor(1, 1, std::vector<double>{0.5})};
    clip_global_norm(small, 1.0);
    CHECK(small[0].data[0] == 0.5);
  }
}
