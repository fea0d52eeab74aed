#include "fiberae/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fiberae/fft.hpp"

namespace fiberae::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

MapConstMat as_mat(const Tensor& t) { return {t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)}; }
MapMat as_mat(Tensor& t) { return {t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)}; }

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_complex(const Tensor& t, const char* op) {
  if (!t.is_complex()) throw std::invalid_argument(std::string(op) + ": expected an (N,2) complex tensor");
}

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != r * c) throw std::invalid_argument("Tensor: data size does not match shape");
}

Tensor Tensor::from_complex(std::span<const cplx> z) {
  Tensor t(z.size(), 2);
  std::copy(z.begin(), z.end(), t.as_complex().begin());
  return t;
}

std::span<cplx> Tensor::as_complex() {
  require_complex(*this, "as_complex");
  return {reinterpret_cast<cplx*>(data.data()), rows};
}

std::span<const cplx> Tensor::as_complex() const {
  require_complex(*this, "as_complex");
  return {reinterpret_cast<const cplx*>(data.data()), rows};
}

CVec Tensor::to_complex() const {
  auto z = as_complex();
  return {z.begin(), z.end()};
}

// ---- Tape -----------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward fn) {
  bool needs = false;
  for (Var p : parents) {
    if (p.tape_ != this) throw std::invalid_argument("Tape: operand recorded on another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(fn) : Backward{}});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id()];
  if (n.grad.data.empty()) n.grad = Tensor(n.value.rows, n.value.cols);
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.data.empty()) return Tensor(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::invalid_argument("backward: loss belongs to another tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows != 1 || lv.cols != 1) throw std::invalid_argument("backward: loss must be a (1,1) scalar");
  for (auto& n : nodes_) n.grad = Tensor{};
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss).data[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.data.empty()) continue;
    n.backward(*this, n.grad);
  }
}

// ---- elementwise and reductions -------------------------------------------

Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require(x.same_shape(y), "add: shape mismatch");
  Tensor out = x;
  accumulate(out, y);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) accumulate(t.grad_buffer(a), g);
    if (t.requires_grad(b)) accumulate(t.grad_buffer(b), g);
  });
}

Var sub(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require(x.same_shape(y), "sub: shape mismatch");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= y.data[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) accumulate(t.grad_buffer(a), g);
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require(x.same_shape(y), "mul: shape mismatch");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= y.data[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(b);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * y.data[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * x.data[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (auto& v : out.data) v *= s;
  return a.tape().record(std::move(out), {a}, [a, s](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += s * g.data[i];
  });
}

Var add_constant(Var a, const Tensor& c) {
  require(a.value().same_shape(c), "add_constant: shape mismatch");
  Tensor out = a.value();
  accumulate(out, c);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) { accumulate(t.grad_buffer(a), g); });
}

Var rsqrt(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data) {
    if (!(v > 0.0)) throw std::domain_error("rsqrt: non-positive input");
    v = 1.0 / std::sqrt(v);
  }
  Tensor y = out;
  return a.tape().record(std::move(out), {a}, [a, y = std::move(y)](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * (-0.5 * y.data[i] * y.data[i] * y.data[i]);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    for (auto& v : t.grad_buffer(a).data) v += g.data[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

// ---- complex ----------------------------------------------------------------

Var cmul(Var a, Var b) {
  require_complex(a.value(), "cmul");
  require(a.value().same_shape(b.value()), "cmul: shape mismatch");
  Tensor out = a.value();
  {
    auto z = out.as_complex();
    auto w = b.value().as_complex();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] *= w[i];
  }
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    auto gz = g.as_complex();
    auto x = t.value(a).as_complex();
    auto y = t.value(b).as_complex();
    if (t.requires_grad(a)) {
      auto ga = t.grad_buffer(a).as_complex();
      for (std::size_t i = 0; i < gz.size(); ++i) ga[i] += std::conj(y[i]) * gz[i];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad_buffer(b).as_complex();
      for (std::size_t i = 0; i < gz.size(); ++i) gb[i] += std::conj(x[i]) * gz[i];
    }
  });
}

Var cmul_const(Var a, std::span<const cplx> mask) {
  require_complex(a.value(), "cmul_const");
  require(mask.size() == a.rows(), "cmul_const: mask length mismatch");
  Tensor out = a.value();
  auto z = out.as_complex();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= mask[i];
  CVec m(mask.begin(), mask.end());
  return a.tape().record(std::move(out), {a}, [a, m = std::move(m)](Tape& t, const Tensor& g) {
    auto gz = g.as_complex();
    auto ga = t.grad_buffer(a).as_complex();
    for (std::size_t i = 0; i < gz.size(); ++i) ga[i] += std::conj(m[i]) * gz[i];
  });
}

Var rmul_const(Var a, std::span<const double> mask) {
  require_complex(a.value(), "rmul_const");
  require(mask.size() == a.rows(), "rmul_const: mask length mismatch");
  Tensor out = a.value();
  auto z = out.as_complex();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= mask[i];
  std::vector<double> m(mask.begin(), mask.end());
  return a.tape().record(std::move(out), {a}, [a, m = std::move(m)](Tape& t, const Tensor& g) {
    auto gz = g.as_complex();
    auto ga = t.grad_buffer(a).as_complex();
    for (std::size_t i = 0; i < gz.size(); ++i) ga[i] += m[i] * gz[i];
  });
}

Var cexp_i(Var theta) {
  const Tensor& th = theta.value();
  require(th.cols == 1, "cexp_i: expected an (N,1) real tensor");
  Tensor out(th.rows, 2);
  auto z = out.as_complex();
  for (std::size_t i = 0; i < th.rows; ++i) z[i] = std::polar(1.0, th.data[i]);
  Tensor copy = out;
  return theta.tape().record(std::move(out), {theta}, [theta, r = std::move(copy)](Tape& t, const Tensor& g) {
    auto gz = g.as_complex();
    auto rz = r.as_complex();
    Tensor& gt = t.grad_buffer(theta);
    // d(cos, sin)/dtheta = (-sin, cos)
    for (std::size_t i = 0; i < gz.size(); ++i)
      gt.data[i] += -gz[i].real() * rz[i].imag() + gz[i].imag() * rz[i].real();
  });
}

Var abs2(Var z) {
  const Tensor& x = z.value();
  require_complex(x, "abs2");
  Tensor out(x.rows, 1);
  auto xz = x.as_complex();
  for (std::size_t i = 0; i < x.rows; ++i) out.data[i] = std::norm(xz[i]);
  return z.tape().record(std::move(out), {z}, [z](Tape& t, const Tensor& g) {
    auto xz = t.value(z).as_complex();
    auto gz = t.grad_buffer(z).as_complex();
    for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += 2.0 * g.data[i] * xz[i];
  });
}

Var fft(Var x) {
  require_complex(x.value(), "fft");
  Tensor out = Tensor::from_complex(dft::forward(x.value().as_complex()));
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const CVec back = dft::inverse(g.as_complex());
    auto gx = t.grad_buffer(x).as_complex();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += back[i];
  });
}

Var ifft(Var x) {
  require_complex(x.value(), "ifft");
  Tensor out = Tensor::from_complex(dft::inverse(x.value().as_complex()));
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const CVec back = dft::forward(g.as_complex());
    auto gx = t.grad_buffer(x).as_complex();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += back[i];
  });
}

Var circular_conv(Var x, Var taps, std::size_t center) {
  require_complex(x.value(), "circular_conv");
  require_complex(taps.value(), "circular_conv");
  const std::size_t n = x.rows();
  const std::size_t l = taps.rows();
  const double root_n = std::sqrt(static_cast<double>(n));

  CVec kernel_f = circular_kernel(taps.value().as_complex(), n, center);
  dft::forward_inplace(kernel_f);
  CVec x_f = dft::forward(x.value().as_complex());
  CVec y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = x_f[k] * kernel_f[k] * root_n;
  dft::inverse_inplace(y);

  return x.tape().record(
      Tensor::from_complex(y), {x, taps},
      [x, taps, center, n, l, root_n, kernel_f = std::move(kernel_f), x_f = std::move(x_f)](Tape& t, const Tensor& g) {
        CVec g_f = dft::forward(g.as_complex());
        if (t.requires_grad(x)) {
          CVec back(n);
          for (std::size_t k = 0; k < n; ++k) back[k] = g_f[k] * std::conj(kernel_f[k]) * root_n;
          dft::inverse_inplace(back);
          auto gx = t.grad_buffer(x).as_complex();
          for (std::size_t i = 0; i < n; ++i) gx[i] += back[i];
        }
        if (t.requires_grad(taps)) {
          // Cross-correlation of the cotangent with x, read back at each tap's lag.
          CVec corr(n);
          for (std::size_t k = 0; k < n; ++k) corr[k] = g_f[k] * std::conj(x_f[k]) * root_n;
          dft::inverse_inplace(corr);
          auto gt = t.grad_buffer(taps).as_complex();
          for (std::size_t j = 0; j < l; ++j) gt[j] += corr[(j + n - center) % n];
        }
      });
}

Var upsample(Var x, std::size_t factor) {
  require_complex(x.value(), "upsample");
  require(factor >= 1, "upsample: factor must be >= 1");
  const CVec up = fiberae::upsample(x.value().as_complex(), factor);
  return x.tape().record(Tensor::from_complex(up), {x}, [x, factor](Tape& t, const Tensor& g) {
    auto gz = g.as_complex();
    auto gx = t.grad_buffer(x).as_complex();
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += gz[k * factor];
  });
}

Var downsample(Var x, std::size_t factor, std::size_t offset) {
  require_complex(x.value(), "downsample");
  const CVec down = fiberae::downsample(x.value().as_complex(), factor, offset);
  return x.tape().record(Tensor::from_complex(down), {x}, [x, factor, offset](Tape& t, const Tensor& g) {
    auto gz = g.as_complex();
    auto gx = t.grad_buffer(x).as_complex();
    for (std::size_t k = 0; k < gz.size(); ++k) gx[k * factor + offset] += gz[k];
  });
}

Var spectral_filter(Var x, std::span<const cplx> mask) {
  require_complex(x.value(), "spectral_filter");
  require(mask.size() == x.rows(), "spectral_filter: mask length mismatch");
  CVec y = dft::forward(x.value().as_complex());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] *= mask[k];
  dft::inverse_inplace(y);
  CVec m(mask.begin(), mask.end());
  return x.tape().record(Tensor::from_complex(y), {x}, [x, m = std::move(m)](Tape& t, const Tensor& g) {
    CVec back = dft::forward(g.as_complex());
    for (std::size_t k = 0; k < back.size(); ++k) back[k] *= std::conj(m[k]);
    dft::inverse_inplace(back);
    auto gx = t.grad_buffer(x).as_complex();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += back[i];
  });
}

Var kerr_phase(Var x, double c) {
  require_complex(x.value(), "kerr_phase");
  Tensor out = x.value();
  for (auto& v : out.as_complex()) v *= std::polar(1.0, -c * std::norm(v));
  Tensor y = out;
  return x.tape().record(std::move(out), {x}, [x, c, y = std::move(y)](Tape& t, const Tensor& g) {
    // x_bar = g exp(+j c|x|^2) + 2c Im(conj(g) y) x
    auto gz = g.as_complex();
    auto yz = y.as_complex();
    auto xz = t.value(x).as_complex();
    auto gx = t.grad_buffer(x).as_complex();
    for (std::size_t i = 0; i < gz.size(); ++i) {
      const cplx rot = std::polar(1.0, c * std::norm(xz[i]));
      gx[i] += gz[i] * rot + 2.0 * c * std::imag(std::conj(gz[i]) * yz[i]) * xz[i];
    }
  });
}

Var power_normalize(Var x, double target) {
  require_complex(x.value(), "power_normalize");
  require(target > 0.0, "power_normalize: target must be > 0");
  const auto xz = x.value().as_complex();
  const double n = static_cast<double>(xz.size());
  double mu = 0.0;
  for (cplx v : xz) mu += std::norm(v);
  mu /= n;
  if (!(mu > 0.0)) throw DegenerateInput("power_normalize: signal has zero energy");
  const double s = std::sqrt(target / mu);
  Tensor out = x.value();
  for (auto& v : out.data) v *= s;
  return x.tape().record(std::move(out), {x}, [x, s, mu, n](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    double inner = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) inner += g.data[i] * xv.data[i];
    const double k = s * inner / (mu * n);
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += s * g.data[i] - k * xv.data[i];
  });
}

// ---- network ----------------------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require(x.cols == y.rows, "matmul: inner dimensions differ");
  Tensor out(x.rows, y.cols);
  as_mat(out).noalias() = as_mat(x) * as_mat(y);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(b);
    if (t.requires_grad(a)) as_mat(t.grad_buffer(a)).noalias() += as_mat(g) * as_mat(y).transpose();
    if (t.requires_grad(b)) as_mat(t.grad_buffer(b)).noalias() += as_mat(x).transpose() * as_mat(g);
  });
}

Var add_bias(Var a, Var bias) {
  const Tensor& x = a.value();
  const Tensor& bv = bias.value();
  require(bv.rows == 1 && bv.cols == x.cols, "add_bias: bias must be (1, cols)");
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) out(r, c) += bv.data[c];
  return a.tape().record(std::move(out), {a, bias}, [a, bias](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) accumulate(t.grad_buffer(a), g);
    if (t.requires_grad(bias)) {
      Tensor& gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) gb.data[c] += g(r, c);
    }
  });
}

Var elu(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data)
    if (v <= 0.0) v = std::expm1(v);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a);
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.data[i] += g.data[i] * (x.data[i] > 0.0 ? 1.0 : std::exp(x.data[i]));
  });
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor p = logits;
  for (std::size_t r = 0; r < p.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < p.cols; ++c) mx = std::max(mx, p(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < p.cols; ++c) z += (p(r, c) = std::exp(p(r, c) - mx));
    for (std::size_t c = 0; c < p.cols; ++c) p(r, c) /= z;
  }
  return p;
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  require(labels.size() == z.rows, "softmax_cross_entropy: one label per row required");
  for (int l : labels) require(l >= 0 && static_cast<std::size_t>(l) < z.cols, "softmax_cross_entropy: label out of range");
  Tensor p = softmax_rows(z);
  double loss = 0.0;
  for (std::size_t r = 0; r < z.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < z.cols; ++c) mx = std::max(mx, z(r, c));
    double acc = 0.0;
    for (std::size_t c = 0; c < z.cols; ++c) acc += std::exp(z(r, c) - mx);
    loss += mx + std::log(acc) - z(r, static_cast<std::size_t>(labels[r]));
  }
  const double b = static_cast<double>(z.rows);
  std::vector<int> lab(labels.begin(), labels.end());
  return logits.tape().record(Tensor::scalar(loss / b), {logits},
                              [logits, p = std::move(p), lab = std::move(lab), b](Tape& t, const Tensor& g) {
                                Tensor& gz = t.grad_buffer(logits);
                                const double s = g.data[0] / b;
                                for (std::size_t r = 0; r < p.rows; ++r)
                                  for (std::size_t c = 0; c < p.cols; ++c)
                                    gz(r, c) += s * (p(r, c) - (static_cast<int>(c) == lab[r] ? 1.0 : 0.0));
                              });
}

Var gather_rows(Var table, std::span<const std::size_t> indices) {
  const Tensor& w = table.value();
  Tensor out(indices.size(), w.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < w.rows, "gather_rows: index out of range");
    std::copy_n(w.data.begin() + static_cast<std::ptrdiff_t>(indices[i] * w.cols), w.cols,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * w.cols));
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return table.tape().record(std::move(out), {table}, [table, idx = std::move(idx)](Tape& t, const Tensor& g) {
    Tensor& gw = t.grad_buffer(table);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < g.cols; ++c) gw(idx[i], c) += g(i, c);
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  require(rows * cols == a.value().size(), "reshape: element count differs");
  Tensor out(rows, cols, a.value().data);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
  });
}

// ---- checking and optimization ----------------------------------------------

GradCheckResult grad_check(const ScalarProgram& f, const Tensor& x0, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be > 0");
  Tensor analytic;
  {
    Tape tape;
    Var x = tape.leaf(x0);
    Var y = f(tape, x);
    tape.backward(y);
    analytic = tape.grad(x);
  }
  auto eval = [&](const Tensor& x) {
    Tape tape;
    Var v = tape.constant(x);
    return f(tape, v).value().data[0];
  };

  double mean_abs = 0.0;
  for (double v : x0.data) mean_abs += std::abs(v);
  mean_abs /= static_cast<double>(std::max<std::size_t>(1, x0.size()));
  if (mean_abs == 0.0) mean_abs = 1.0;

  std::vector<double> numeric(x0.size());
  Tensor xp = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double h = eps * std::max(std::abs(x0.data[i]), mean_abs);
    xp.data[i] = x0.data[i] + h;
    const double fp = eval(xp);
    xp.data[i] = x0.data[i] - h;
    const double fm = eval(xp);
    xp.data[i] = x0.data[i];
    numeric[i] = (fp - fm) / (2.0 * h);
  }

  double gmax = 0.0;
  for (double v : numeric) gmax = std::max(gmax, std::abs(v));
  const double floor = std::max(1e-3 * gmax, std::numeric_limits<double>::min());

  GradCheckResult res;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double a = analytic.data[i];
    const double b = numeric[i];
    const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
    if (i == 0 || rel > res.max_rel_error) res = {rel, i, a, b};
  }
  return res;
}

void adam_update(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
                 const AdamOptions& opt) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_update: params/grads count mismatch");
  for (std::size_t p = 0; p < params.size(); ++p)
    if (!params[p].same_shape(grads[p])) throw std::invalid_argument("adam_update: shape mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.rows, p.cols);
      state.v.emplace_back(p.rows, p.cols);
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_update: state does not match params");

  ++state.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.m[p].data;
    auto& v = state.v[p].data;
    auto& w = params[p].data;
    const auto& g = grads[p].data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double ss = 0.0;
  for (const auto& g : grads)
    for (double v : g.data) ss += v * v;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (auto& v : g.data) v *= s;
  }
  return norm;
}

}  // namespace fiberae::ad
