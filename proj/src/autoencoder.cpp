#include "fiberae/autoencoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fiberae/conventional.hpp"
#include "fiberae/csv.hpp"
#include "fiberae/diff_channel.hpp"
#include "fiberae/rng.hpp"

namespace fiberae {
namespace {

bool all_finite(const ad::Tensor& t) {
  return std::all_of(t.data.begin(), t.data.end(), [](double v) { return std::isfinite(v); });
}

CVec lowpass_cmask(std::size_t n, const ChannelConfig& cfg) {
  const auto m = lowpass_mask(n, cfg.f_sim_hz, converter_cutoff_hz(cfg));
  return {m.begin(), m.end()};
}

std::vector<std::size_t> window_indices(std::size_t n_b, int n_adj) {
  std::vector<std::size_t> idx;
  idx.reserve(n_b * static_cast<std::size_t>(2 * n_adj + 1));
  const auto nb = static_cast<long>(n_b);
  for (long i = 0; i < nb; ++i)
    for (long j = -n_adj; j <= n_adj; ++j) idx.push_back(static_cast<std::size_t>(((i + j) % nb + nb) % nb));
  return idx;
}

SymbolBlock draw_block(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, const TrainConfig& cfg) {
  Rng rng(derive_seed(seed, stream, index));
  return random_symbols(cfg.block_symbols, cfg.alphabet_size, rng);
}

std::vector<int> argmax_rows(const ad::Tensor& logits) {
  std::vector<int> out(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols; ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

std::vector<double> unwrap(std::vector<double> ph) {
  for (std::size_t i = 1; i < ph.size(); ++i) {
    double d = ph[i] - ph[i - 1];
    d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
    ph[i] = ph[i - 1] + d;
  }
  return ph;
}

std::size_t psd_segment(std::size_t n) { return std::min<std::size_t>(1024, n); }

void write_psd(const std::filesystem::path& file, const ComplexSignal& sig) {
  const auto psd = welch_psd(sig, psd_segment(sig.size()));
  CsvWriter csv(file, {"freq_hz", "psd_db"});
  for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) csv.row({psd.freq_hz[i], psd.psd_db[i]});
}

// Impulse at symbol `at` of an n_b-symbol block through upsampling, F and the TX LPF.
CVec shaper_pulse(const AeTxParams& tx, const ChannelConfig& cfg, std::size_t n_b, std::size_t at) {
  const std::size_t osf = cfg.oversampling();
  CVec up(n_b * osf);
  up[at * osf] = 1.0;
  const CVec taps = tx.shaper.to_complex();
  const ComplexSignal shaped(fir_filter(up, taps, tx.center()), cfg.f_sim_hz);
  return ideal_lowpass(shaped, converter_cutoff_hz(cfg)).vec();
}

}  // namespace

// ---- parameter types -------------------------------------------------------

void AeTxParams::validate() const {
  if (embedding.cols != 2 || embedding.rows < 2) throw std::invalid_argument("AeTxParams: embedding must be (M,2), M >= 2");
  if (shaper.cols != 2 || shaper.rows % 2 == 0) throw std::invalid_argument("AeTxParams: shaper must be (L_F,2) with odd L_F");
  if (!all_finite(embedding) || !all_finite(shaper)) throw std::invalid_argument("AeTxParams: non-finite parameter");
}

int AeRxParams::alphabet_size() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.cols);
}

void AeRxParams::validate() const {
  if (n_adj < 0) throw std::invalid_argument("AeRxParams: n_adj must be >= 0");
  if (layers.empty()) throw std::invalid_argument("AeRxParams: no layers");
  std::size_t in = input_dim();
  for (const auto& l : layers) {
    if (l.weight.rows != in || l.bias.rows != 1 || l.bias.cols != l.weight.cols)
      throw std::invalid_argument("AeRxParams: layer dimensions do not chain");
    in = l.weight.cols;
  }
}

double TrainConfig::learning_rate_at(long iteration) const {
  const long quarter = std::max(1L, iterations / 4);
  return learning_rate * std::pow(0.5, static_cast<double>(iteration / quarter));
}

void TrainConfig::validate() const {
  channel.validate();
  if (alphabet_size < 2) throw std::invalid_argument("train: alphabet size must be >= 2");
  if (block_symbols < 1) throw std::invalid_argument("train: block_symbols must be >= 1");
  if (n_adj < 0) throw std::invalid_argument("train: n_adj must be >= 0");
  if (static_cast<std::size_t>(2 * n_adj + 1) > block_symbols)
    throw std::invalid_argument("train: window 2*n_adj+1 exceeds the block length");
  if (shaper_taps() > block_symbols * channel.oversampling())
    throw std::invalid_argument("train: shaper longer than the block");
  if (!(launch_power_w > 0.0)) throw std::invalid_argument("train: launch power must be > 0");
  if (iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
  if (!(learning_rate > 0.0) || !(clip_norm > 0.0)) throw std::invalid_argument("train: lr and clip must be > 0");
  if (eval_blocks < 1) throw std::invalid_argument("train: eval_blocks must be >= 1");
  for (auto h : hidden)
    if (h == 0) throw std::invalid_argument("train: hidden widths must be > 0");
}

std::string TrainConfig::canonical() const {
  std::ostringstream os;
  os << std::hexfloat;
  const auto& c = channel;
  os << "planck=" << c.planck << "\nf0_hz=" << c.f0_hz << "\nalpha=" << c.alpha_per_km
     << "\nbeta2=" << c.beta2_s2_per_km << "\ngamma=" << c.gamma_per_w_km << "\nn_sp=" << c.n_sp
     << "\nlength_km=" << c.length_km << "\nn_ssfm=" << c.n_ssfm_steps << "\nf_sim_hz=" << c.f_sim_hz
     << "\nbw_hz=" << c.bw_hz << "\nawgn=" << c.enable_awgn << "\ncd=" << c.enable_cd << "\nknl=" << c.enable_knl
     << "\npower_w=" << launch_power_w << "\nM=" << alphabet_size << "\nn_b=" << block_symbols
     << "\nn_adj=" << n_adj << "\nhidden=";
  for (auto h : hidden) os << h << ' ';
  os << "\nshaper_span=" << shaper_span_symbols << "\niterations=" << iterations << "\nlr=" << learning_rate
     << "\nclip=" << clip_norm << "\nseed=" << seed << "\neval_blocks=" << eval_blocks << '\n';
  return os.str();
}

AeModel init_model(const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, kStreamInit, 0));
  AeModel m;
  m.tx.embedding = ad::Tensor(static_cast<std::size_t>(cfg.alphabet_size), 2);
  for (auto& v : m.tx.embedding.data) v = rng.uniform(-1.0, 1.0);
  const CVec sinc = sinc_taps(cfg.channel.oversampling(), cfg.shaper_span_symbols);
  m.tx.shaper = ad::Tensor::from_complex(sinc);

  m.rx.n_adj = cfg.n_adj;
  std::vector<std::size_t> dims{m.rx.input_dim()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(static_cast<std::size_t>(cfg.alphabet_size));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    DenseLayer layer{ad::Tensor(dims[l], dims[l + 1]), ad::Tensor(1, dims[l + 1])};
    for (auto& v : layer.weight.data) v = rng.uniform(-bound, bound);
    for (auto& v : layer.bias.data) v = rng.uniform(-bound, bound);
    m.rx.layers.push_back(std::move(layer));
  }
  return m;
}

AeTxParams conventional_tx_params(int alphabet_size, std::size_t osf, std::size_t span_symbols) {
  const auto c = Constellation::square_qam(alphabet_size);
  return {ad::Tensor::from_complex(c.points()), ad::Tensor::from_complex(sinc_taps(osf, span_symbols))};
}

ModelVars bind(ad::Tape& tape, const AeModel& model, bool requires_grad) {
  ModelVars v;
  v.embedding = tape.leaf(model.tx.embedding, requires_grad);
  v.shaper = tape.leaf(model.tx.shaper, requires_grad);
  for (const auto& l : model.rx.layers)
    v.layers.emplace_back(tape.leaf(l.weight, requires_grad), tape.leaf(l.bias, requires_grad));
  return v;
}

std::vector<ad::Tensor*> parameters(AeModel& model) {
  std::vector<ad::Tensor*> p{&model.tx.embedding, &model.tx.shaper};
  for (auto& l : model.rx.layers) {
    p.push_back(&l.weight);
    p.push_back(&l.bias);
  }
  return p;
}

// ---- transmitter and receiver ----------------------------------------------

ad::Var ae_tx(ad::Var embedding, ad::Var shaper, const SymbolBlock& s, double launch_power_w,
              const ChannelConfig& cfg) {
  if (shaper.rows() % 2 == 0) throw std::invalid_argument("ae_tx: shaper length must be odd");
  std::vector<std::size_t> idx(s.indices().begin(), s.indices().end());
  ad::Var c = ad::gather_rows(embedding, idx);
  c = ad::power_normalize(c, 1.0);
  ad::Var up = ad::upsample(c, cfg.oversampling());
  ad::Var shaped = ad::circular_conv(up, shaper, shaper.rows() / 2);
  ad::Var band = ad::spectral_filter(shaped, lowpass_cmask(shaped.rows(), cfg));
  return ad::power_normalize(band, launch_power_w);
}

ComplexSignal ae_tx(const SymbolBlock& s, const AeTxParams& p, double launch_power_w, const ChannelConfig& cfg) {
  ad::Tape tape;
  ad::Var x = ae_tx(tape.constant(p.embedding), tape.constant(p.shaper), s, launch_power_w, cfg);
  return {x.value().to_complex(), cfg.f_sim_hz};
}

ad::Var ae_rx_logits(ad::Var y, const ModelVars& vars, int n_adj, double launch_power_w, const ChannelConfig& cfg) {
  ad::Var ys = ad::downsample(y, cfg.oversampling(), 0);
  ys = ad::scale(ys, 1.0 / std::sqrt(launch_power_w));
  const std::size_t n_b = ys.rows();
  const auto idx = window_indices(n_b, n_adj);
  ad::Var h = ad::reshape(ad::gather_rows(ys, idx), n_b, 2 * static_cast<std::size_t>(2 * n_adj + 1));
  for (std::size_t l = 0; l < vars.layers.size(); ++l) {
    h = ad::add_bias(ad::matmul(h, vars.layers[l].first), vars.layers[l].second);
    if (l + 1 < vars.layers.size()) h = ad::elu(h);
  }
  return h;
}

ad::Tensor ae_rx(const ComplexSignal& y, const AeRxParams& p, double launch_power_w, const ChannelConfig& cfg) {
  p.validate();
  ad::Tape tape;
  ModelVars vars;
  for (const auto& l : p.layers) vars.layers.emplace_back(tape.constant(l.weight), tape.constant(l.bias));
  ad::Var yv = tape.constant(ad::Tensor::from_complex(y.samples()));
  return ad::softmax_rows(ae_rx_logits(yv, vars, p.n_adj, launch_power_w, cfg).value());
}

// ---- training ----------------------------------------------------------------

double train_step(TrainState& state, const TrainConfig& cfg) {
  const auto it = static_cast<std::uint64_t>(state.iteration);
  const SymbolBlock s = draw_block(cfg.seed, kStreamSymbols, it, cfg);

  ad::Tape tape;
  const ModelVars vars = bind(tape, state.model, true);
  ad::Var x = ae_tx(vars.embedding, vars.shaper, s, cfg.launch_power_w, cfg.channel);
  ad::Var y = ad::adc(ad::ssfm_propagate(ad::dac(x, cfg.channel), cfg.channel,
                                         derive_seed(cfg.seed, kStreamNoise, it)),
                      cfg.channel);
  ad::Var logits = ae_rx_logits(y, vars, cfg.n_adj, cfg.launch_power_w, cfg.channel);
  ad::Var loss = ad::softmax_cross_entropy(logits, s.indices());
  const double l = loss.value().data[0];
  if (!std::isfinite(l))
    throw TrainingDiverged("non-finite loss at iteration " + std::to_string(state.iteration));
  tape.backward(loss);

  std::vector<ad::Tensor> grads{tape.grad(vars.embedding), tape.grad(vars.shaper)};
  for (const auto& [w, b] : vars.layers) {
    grads.push_back(tape.grad(w));
    grads.push_back(tape.grad(b));
  }
  for (const auto& g : grads)
    if (!all_finite(g))
      throw TrainingDiverged("non-finite gradient at iteration " + std::to_string(state.iteration));
  ad::clip_global_norm(grads, cfg.clip_norm);

  auto ptrs = parameters(state.model);
  std::vector<ad::Tensor> params;
  params.reserve(ptrs.size());
  for (auto* p : ptrs) params.push_back(std::move(*p));
  ad::adam_update(params, grads, state.adam, {cfg.learning_rate_at(state.iteration)});
  for (std::size_t i = 0; i < ptrs.size(); ++i) *ptrs[i] = std::move(params[i]);

  state.loss_history.push_back(l);
  ++state.iteration;
  return l;
}

AeEvaluation evaluate(const AeModel& model, const TrainConfig& cfg) {
  std::vector<SymbolBlock> sent, decided;
  for (std::size_t b = 0; b < cfg.eval_blocks; ++b) {
    const SymbolBlock s = draw_block(cfg.seed, kStreamEval, 2 * b, cfg);
    ad::Tape tape;
    const ModelVars vars = bind(tape, model, false);
    ad::Var x = ae_tx(vars.embedding, vars.shaper, s, cfg.launch_power_w, cfg.channel);
    ad::Var y = ad::adc(ad::ssfm_propagate(ad::dac(x, cfg.channel), cfg.channel,
                                           derive_seed(cfg.seed, kStreamEval, 2 * b + 1)),
                        cfg.channel);
    const ad::Var logits = ae_rx_logits(y, vars, cfg.n_adj, cfg.launch_power_w, cfg.channel);
    decided.emplace_back(argmax_rows(logits.value()), cfg.alphabet_size);
    sent.push_back(s);
  }
  AeEvaluation e;
  e.mi = estimate_mi_pooled(sent, decided);
  std::size_t errors = 0, total = 0;
  for (std::size_t b = 0; b < sent.size(); ++b) {
    errors += static_cast<std::size_t>(std::llround(symbol_error_rate(sent[b], decided[b]) * static_cast<double>(sent[b].size())));
    total += sent[b].size();
  }
  e.ser = static_cast<double>(errors) / static_cast<double>(total);
  e.se = spectral_efficiency(e.mi.estimate.mi_bits, 1.0 / cfg.channel.symbol_rate_hz(), cfg.channel.bw_hz);
  return e;
}

TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  TrainResult r;
  if (hooks.resume) {
    r.state = *hooks.resume;
    r.state.model.tx.validate();
    r.state.model.rx.validate();
  } else {
    r.state.model = init_model(cfg);
  }
  while (r.state.iteration < cfg.iterations) {
    double loss = 0.0;
    try {
      loss = train_step(r.state, cfg);
    } catch (const TrainingDiverged& e) {
      r.diverged = true;
      r.diagnostic = e.what();
      break;
    }
    if (hooks.on_progress) hooks.on_progress(r.state.iteration, loss);
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && r.state.iteration % hooks.checkpoint_every == 0)
      hooks.on_checkpoint(r.state);
  }
  r.evaluation = evaluate(r.state.model, cfg);
  return r;
}

// ---- artifacts -------------------------------------------------------------------

void export_learned_artifacts(const AeModel& model, const TrainConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& ch = cfg.channel;
  const std::size_t osf = ch.oversampling();
  const double p = cfg.launch_power_w;

  {
    const CVec pts = normalize_power(model.tx.embedding.to_complex(), 1.0);
    CsvWriter csv(dir / "emb.csv", {"index", "re_unit_power", "im_unit_power"});
    for (std::size_t i = 0; i < pts.size(); ++i) csv.row(std::to_string(i), {pts[i].real(), pts[i].imag()});
  }

  // One symbol of energy P*T, centered in an otherwise empty block.
  const std::size_t n_b = cfg.block_symbols;
  const std::size_t at = n_b / 2;
  CVec pulse = shaper_pulse(model.tx, ch, n_b, at);
  double energy = 0.0;
  for (cplx v : pulse) energy += std::norm(v);
  const double gain = std::sqrt(p * static_cast<double>(osf) / energy);
  for (auto& v : pulse) v *= gain;
  ChannelConfig quiet = ch;
  quiet.enable_awgn = false;
  const ComplexSignal rx = adc(ssfm_propagate(dac(ComplexSignal(pulse, ch.f_sim_hz), quiet), quiet, 0), quiet);

  CsvWriter tx_csv(dir / "pulse_tx.csv", {"t_symbols", "power_w", "phase_rad", "nyquist_power_w"});
  CsvWriter rx_csv(dir / "pulse_rx.csv", {"t_symbols", "power_w", "phase_rad"});
  for (std::size_t i = 0; i < pulse.size(); ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(at * osf)) / static_cast<double>(osf);
    const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
    tx_csv.row({t, std::norm(pulse[i]), std::arg(pulse[i]), p * sinc * sinc});
    rx_csv.row({t, std::norm(rx.samples()[i]), std::arg(rx.samples()[i])});
  }

  const SymbolBlock s = draw_block(cfg.seed, kStreamEval, 0, cfg);
  const ComplexSignal x = ae_tx(s, model.tx, p, ch);
  const ComplexSignal y_o = ssfm_propagate(dac(x, ch), ch, derive_seed(cfg.seed, kStreamEval, 1));
  write_psd(dir / "psd_ae_x.csv", x);
  write_psd(dir / "psd_ae_yo.csv", y_o);
  write_psd(dir / "psd_ae_y.csv", adc(y_o, ch));
}

CVec load_constellation_csv(const std::filesystem::path& file) {
  CVec pts;
  for (const auto& row : read_csv(file)) {
    if (row.size() != 3) throw std::runtime_error("load_constellation_csv: expected 3 columns in " + file.string());
    if (static_cast<std::size_t>(row[0]) != pts.size())
      throw std::runtime_error("load_constellation_csv: indices out of order in " + file.string());
    pts.emplace_back(row[1], row[2]);
  }
  return pts;
}

ResponseShape analyze_shaper(const AeTxParams& tx, const ChannelConfig& cfg, std::size_t block_symbols) {
  tx.validate();
  ChannelConfig lin = cfg;
  lin.enable_knl = false;
  lin.enable_awgn = false;
  const CVec pulse = shaper_pulse(tx, lin, block_symbols, 0);
  const ComplexSignal y = adc(ssfm_propagate(dac(ComplexSignal(pulse, lin.f_sim_hz), lin), lin, 0), lin);
  const CVec r = downsample(y, lin.oversampling(), 0);

  ResponseShape out;
  double total = 0.0, peak = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double e = std::norm(r[k]);
    total += e;
    if (e > peak) peak = e, out.main_tap = k;
  }
  out.isi_fraction = total > 0.0 ? 1.0 - peak / total : 1.0;

  const CVec taps = tx.shaper.to_complex();
  std::vector<double> ph(taps.size());
  for (std::size_t i = 0; i < taps.size(); ++i) ph[i] = std::arg(taps[i]);
  ph = unwrap(std::move(ph));
  const std::size_t n = taps.size();
  const std::size_t lo = n / 4, hi = n - n / 4;
  const auto m = static_cast<Eigen::Index>(hi - lo);
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd b(m);
  for (std::size_t i = lo; i < hi; ++i) {
    const double t = static_cast<double>(i) - static_cast<double>(n - 1) / 2.0;
    const auto row = static_cast<Eigen::Index>(i - lo);
    a(row, 0) = t * t;
    a(row, 1) = t;
    a(row, 2) = 1.0;
    b(row) = ph[i];
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd resid = b - a * coef;
  const double ss_res = resid.squaredNorm();
  const double ss_tot = (b.array() - b.mean()).square().sum();
  out.curvature = coef(0);
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return out;
}

}  // namespace fiberae
