#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fiberae/signal.hpp"

// Reverse-mode automatic differentiation on a tape of real 2-D tensors.
//
// Complex vectors are stored as (N, 2) tensors with interleaved real/imaginary
// parts, so every primitive is an ordinary real function and its gradient is
// the ordinary real gradient. For a complex cotangent g = dL/dRe + j dL/dIm,
// a complex-linear map y = A x back-propagates as x_bar = A^H y_bar.
namespace fiberae::ad {

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> d);

  static Tensor from_complex(std::span<const cplx> z);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t size() const { return data.size(); }
  bool is_complex() const { return cols == 2; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<cplx> as_complex();
  std::span<const cplx> as_complex() const;
  CVec to_complex() const;
};

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Propagates this node's gradient `out_grad` into its parents.
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  /// Gradient of the last backward() target; zeros for nodes it does not reach.
  Tensor grad(Var v) const;

  /// Reverse sweep from a (1,1) loss. Gradients accumulate across fan-out.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Primitive authoring. `fn` is skipped when no parent requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward fn);
  /// Accumulation buffer of `v`; only valid for nodes that require a gradient.
  Tensor& grad_buffer(Var v);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// ---- elementwise and reductions -------------------------------------------
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_constant(Var a, const Tensor& c);
Var rsqrt(Var a);
Var sum(Var a);
Var mean(Var a);

// ---- complex (N,2) --------------------------------------------------------
Var cmul(Var a, Var b);
/// Multiply by a fixed complex mask (frequency-domain filters, CD steps).
Var cmul_const(Var a, std::span<const cplx> mask);
/// Multiply by a fixed real mask (brickwall LPF).
Var rmul_const(Var a, std::span<const double> mask);
/// exp(j theta) for a real (N,1) theta.
Var cexp_i(Var theta);
/// |z|^2 as a real (N,1) tensor.
Var abs2(Var z);
Var fft(Var x);
Var ifft(Var x);
/// Circular convolution with trainable complex taps (L,2); tap `center` at lag 0.
Var circular_conv(Var x, Var taps, std::size_t center);
Var upsample(Var x, std::size_t factor);
Var downsample(Var x, std::size_t factor, std::size_t offset);
/// ifft(mask * fft(x)): fixed frequency-domain filter (LPF, CD step).
Var spectral_filter(Var x, std::span<const cplx> mask);
/// x * exp(-j c |x|^2), the Kerr rotation with c = gamma * dz.
Var kerr_phase(Var x, double c);
/// x * sqrt(target / mean|x|^2), differentiating through the mean.
Var power_normalize(Var x, double target);

// ---- network --------------------------------------------------------------
Var matmul(Var a, Var b);
/// (B,H) + broadcast (1,H).
Var add_bias(Var a, Var bias);
Var elu(Var a);
/// Mean over rows of -log softmax(logits)[label].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);
/// Rows of `table` selected by `indices` (embedding lookup / windowing).
Var gather_rows(Var table, std::span<const std::size_t> indices);
Var reshape(Var a, std::size_t rows, std::size_t cols);

/// Row-wise softmax of a plain tensor (no tape).
Tensor softmax_rows(const Tensor& logits);

// ---- checking and optimization --------------------------------------------
using ScalarProgram = std::function<Var(Tape&, Var)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares reverse-mode gradients of f at x0 with central differences.
/// Coordinate i uses step eps * max(|x_i|, mean|x0|). The per-coordinate error
/// is |ad - fd| / max(|ad|, |fd|, floor), floor = 1e-3 * max_i |fd_i|, so that
/// coordinates with negligible gradient do not dominate.
GradCheckResult grad_check(const ScalarProgram& f, const Tensor& x0, double eps = 1e-5);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

/// One bias-corrected Adam step over all parameter tensors.
void adam_update(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
                 const AdamOptions& opt);

/// Rescales grads so their joint L2 norm is at most max_norm. Returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

}  // namespace fiberae::ad
