#include "fiberae/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fiberae/checkpoint.hpp"
#include "fiberae/csv.hpp"
#include "fiberae/metrics.hpp"
#include "fiberae/rng.hpp"

namespace fiberae {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(d)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

long to_long(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long n = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return n;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long n = to_long(key, v);
  if (n < 0) throw ConfigError(key + ": must be >= 0");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true|false, got '" + v + "'");
}

std::vector<double> to_power_grid(const std::string& key, const std::string& v) {
  std::vector<double> grid;
  if (v.find(':') != std::string::npos) {
    const auto parts = split(v, ':');
    if (parts.size() != 3) throw ConfigError(key + ": range must be start:step:stop");
    const double a = to_double(key, parts[0]), step = to_double(key, parts[1]), b = to_double(key, parts[2]);
    if (!(step > 0.0) || b < a) throw ConfigError(key + ": range needs step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(a + step * static_cast<double>(i));
    return grid;
  }
  for (const auto& item : split(v, ','))
    if (!item.empty()) grid.push_back(to_double(key, item));
  return grid;
}

std::string num(double v) { return format_number(v); }

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string hex16(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* preset_name(Preset p) { return p == Preset::Desk ? "desk" : "full"; }
const char* system_name(SystemKind s) { return s == SystemKind::Conventional ? "conv" : "ae"; }

void write_psd(const std::filesystem::path& file, const ComplexSignal& sig) {
  const auto psd = welch_psd(sig, std::min<std::size_t>(1024, sig.size()));
  CsvWriter csv(file, {"freq_hz", "psd_db"});
  for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) csv.row({psd.freq_hz[i], psd.psd_db[i]});
}

SymbolBlock eval_symbols(const ExperimentConfig& cfg, std::size_t b) {
  Rng rng(derive_seed(cfg.seed, kStreamSymbols, b));
  return random_symbols(cfg.block_symbols, cfg.alphabet_size, rng);
}

void emit_psd_point(const ExperimentConfig& cfg, double p_dbm, const std::filesystem::path& dir) {
  const auto ch = cfg.channel_config();
  const auto c = Constellation::square_qam(cfg.alphabet_size);
  const auto trace = conventional_link_trace(eval_symbols(cfg, 0), c, ch, dbm_to_watts(p_dbm),
                                             derive_seed(cfg.seed, kStreamNoise, 0),
                                             {cfg.span_symbols, cfg.cd_filter});
  const auto tag = power_tag(p_dbm);
  write_psd(dir / ("psd_x_" + tag + ".csv"), trace.x);
  write_psd(dir / ("psd_yo_" + tag + ".csv"), trace.y_o);
  write_psd(dir / ("psd_y_" + tag + ".csv"), trace.y);
}

SweepPoint conventional_point(const ExperimentConfig& cfg, double p_dbm) {
  const auto ch = cfg.channel_config();
  const auto c = Constellation::square_qam(cfg.alphabet_size);
  const double p = dbm_to_watts(p_dbm);
  std::vector<SymbolBlock> sent, decided;
  std::size_t errors = 0, total = 0;
  for (std::size_t b = 0; b < cfg.eval_blocks; ++b) {
    sent.push_back(eval_symbols(cfg, b));
    decided.push_back(conventional_link(sent.back(), c, ch, p, derive_seed(cfg.seed, kStreamNoise, b),
                                        {cfg.span_symbols, cfg.cd_filter}));
    for (std::size_t i = 0; i < sent.back().size(); ++i) errors += sent.back()[i] != decided.back()[i];
    total += sent.back().size();
  }
  const auto mi = estimate_mi_pooled(sent, decided);
  SweepPoint pt;
  pt.p_dbm = p_dbm;
  pt.mi_bits = mi.estimate.mi_bits;
  pt.mi_stderr = mi.std_error;
  pt.ser = static_cast<double>(errors) / static_cast<double>(total);
  return pt;
}

void fill_references(const ExperimentConfig& cfg, SweepPoint& pt) {
  const auto ch = cfg.channel_config();
  const double s = snr(dbm_to_watts(pt.p_dbm), ch);
  pt.snr_db = 10.0 * std::log10(s);
  pt.se = spectral_efficiency(pt.mi_bits, 1.0 / ch.symbol_rate_hz(), ch.bw_hz);
  pt.seed = cfg.seed;
  pt.shannon_bits = awgn_capacity(s);
  pt.qam_capacity_bits =
      qam_symbolwise_capacity(s, cfg.alphabet_size, cfg.qam_capacity_samples, cfg.seed).bits;
}

}  // namespace

// ---- configuration -------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_preset(Preset p) {
  ExperimentConfig c;
  c.preset = p;
  if (p == Preset::Desk) {
    c.physics.f_sim_hz = 8.0 * c.physics.bw_hz;
    c.physics.n_ssfm_steps = 50;
    c.alphabet_size = 16;
    c.block_symbols = 256;
    c.power_dbm = to_power_grid("power_dbm", "-30:2:0");
    c.hidden = {256, 128, 128, 128, 128, 128};
    c.iterations = 2000;
  } else {
    c.alphabet_size = 256;
    c.block_symbols = 2048;
    c.power_dbm = to_power_grid("power_dbm", "-30:2:10");
    c.hidden = {2048, 512, 512, 512, 512, 512};
    c.iterations = 20000;
  }
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  auto& ph = physics;
  if (key == "preset") {
    if (v != "desk" && v != "full") throw ConfigError("preset: expected desk|full, got '" + v + "'");
    preset = v == "desk" ? Preset::Desk : Preset::Full;
  } else if (key == "system") {
    if (v == "conv" || v == "conventional") system = SystemKind::Conventional;
    else if (v == "ae") system = SystemKind::Autoencoder;
    else throw ConfigError("system: expected conv|ae, got '" + v + "'");
  } else if (key == "channel") {
    if (v != "a" && v != "ad" && v != "adn") throw ConfigError("channel: expected a|ad|adn, got '" + v + "'");
    channel = v;
  } else if (key == "seed") {
    const long s = to_long(key, v);
    if (s < 0) throw ConfigError("seed: must be >= 0");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "out") {
    if (v.empty()) throw ConfigError("out: empty path");
    out = v;
  } else if (key == "power_dbm") {
    power_dbm = to_power_grid(key, v);
  } else if (key == "M") {
    alphabet_size = static_cast<int>(to_long(key, v));
  } else if (key == "n_b") {
    block_symbols = to_count(key, v);
  } else if (key == "osf") {
    ph.f_sim_hz = static_cast<double>(to_count(key, v)) * ph.bw_hz;
  } else if (key == "n_ssfm") {
    ph.n_ssfm_steps = static_cast<int>(to_long(key, v));
  } else if (key == "length_km") {
    ph.length_km = to_double(key, v);
  } else if (key == "beta2") {
    ph.beta2_s2_per_km = to_double(key, v);
  } else if (key == "gamma") {
    ph.gamma_per_w_km = to_double(key, v);
  } else if (key == "alpha") {
    ph.alpha_per_km = to_double(key, v);
  } else if (key == "n_sp") {
    ph.n_sp = to_double(key, v);
  } else if (key == "f0_hz") {
    ph.f0_hz = to_double(key, v);
  } else if (key == "planck") {
    ph.planck = to_double(key, v);
  } else if (key == "bw_hz") {
    const double osf = ph.f_sim_hz / ph.bw_hz;
    ph.bw_hz = to_double(key, v);
    ph.f_sim_hz = osf * ph.bw_hz;
  } else if (key == "eval_blocks") {
    eval_blocks = to_count(key, v);
  } else if (key == "qam_capacity_samples") {
    qam_capacity_samples = to_count(key, v);
  } else if (key == "psd") {
    psd = to_bool(key, v);
  } else if (key == "threads") {
    threads = to_count(key, v);
  } else if (key == "span_symbols") {
    span_symbols = to_count(key, v);
  } else if (key == "cd_filter") {
    if (v == "exact") cd_filter = CdFilter::Exact;
    else if (v == "fir") cd_filter = CdFilter::Fir;
    else throw ConfigError("cd_filter: expected exact|fir, got '" + v + "'");
  } else if (key == "n_adj") {
    n_adj = static_cast<int>(to_long(key, v));
  } else if (key == "iterations") {
    iterations = to_long(key, v);
  } else if (key == "learning_rate") {
    learning_rate = to_double(key, v);
  } else if (key == "hidden") {
    hidden.clear();
    for (const auto& item : split(v, ','))
      if (!item.empty()) hidden.push_back(to_count(key, item));
  } else if (key == "shaper_span") {
    shaper_span_symbols = to_count(key, v);
  } else if (key == "checkpoint_every") {
    checkpoint_every = to_long(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (power_dbm.empty()) throw ConfigError("power_dbm: power grid is empty");
  if (preset == Preset::Desk)
    for (double p : power_dbm)
      if (p > 0.0) throw ConfigError("desk preset is limited to P <= 0 dBm (got " + num(p) + ")");
  if (eval_blocks < 1) throw ConfigError("eval_blocks: must be >= 1");
  if (block_symbols < 1) throw ConfigError("n_b: must be >= 1");
  if (span_symbols < 1) throw ConfigError("span_symbols: must be >= 1");
  if (qam_capacity_samples < 1) throw ConfigError("qam_capacity_samples: must be >= 1");
  try {
    (void)Constellation::square_qam(alphabet_size);
    physics.validate();
    if (physics.oversampling() < 2) throw ConfigError("osf: must be >= 2");
    if (system == SystemKind::Autoencoder) train_config(power_dbm.front()).validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string ExperimentConfig::resolved() const {
  std::ostringstream os;
  const auto& ph = physics;
  std::string grid;
  for (std::size_t i = 0; i < power_dbm.size(); ++i) grid += (i ? "," : "") + num(power_dbm[i]);
  os << "preset = " << preset_name(preset) << '\n'
     << "system = " << system_name(system) << '\n'
     << "channel = " << channel << '\n'
     << "seed = " << seed << '\n'
     << "power_dbm = " << grid << '\n'
     << "M = " << alphabet_size << '\n'
     << "n_b = " << block_symbols << '\n'
     << "osf = " << ph.oversampling() << '\n'
     << "n_ssfm = " << ph.n_ssfm_steps << '\n'
     << "length_km = " << num(ph.length_km) << '\n'
     << "beta2 = " << num(ph.beta2_s2_per_km) << '\n'
     << "gamma = " << num(ph.gamma_per_w_km) << '\n'
     << "alpha = " << num(ph.alpha_per_km) << '\n'
     << "n_sp = " << num(ph.n_sp) << '\n'
     << "f0_hz = " << num(ph.f0_hz) << '\n'
     << "planck = " << num(ph.planck) << '\n'
     << "bw_hz = " << num(ph.bw_hz) << '\n'
     << "eval_blocks = " << eval_blocks << '\n'
     << "qam_capacity_samples = " << qam_capacity_samples << '\n'
     << "psd = " << (psd ? "true" : "false") << '\n'
     << "span_symbols = " << span_symbols << '\n'
     << "cd_filter = " << (cd_filter == CdFilter::Exact ? "exact" : "fir") << '\n'
     << "n_adj = " << n_adj << '\n'
     << "iterations = " << iterations << '\n'
     << "learning_rate = " << num(learning_rate) << '\n'
     << "hidden = " << join_sizes(hidden) << '\n'
     << "shaper_span = " << shaper_span_symbols << '\n'
     << "checkpoint_every = " << checkpoint_every << '\n';
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(resolved()); }

std::string ExperimentConfig::run_id() const { return hex16(hash()).substr(0, 12) + "-s" + std::to_string(seed); }

ChannelConfig ExperimentConfig::channel_config() const { return with_impairments(physics, channel); }

TrainConfig ExperimentConfig::train_config(double p_dbm) const {
  TrainConfig t;
  t.channel = channel_config();
  t.launch_power_w = dbm_to_watts(p_dbm);
  t.alphabet_size = alphabet_size;
  t.block_symbols = block_symbols;
  t.n_adj = n_adj;
  t.hidden = hidden;
  t.shaper_span_symbols = shaper_span_symbols;
  t.iterations = iterations;
  t.learning_rate = learning_rate;
  t.seed = seed;
  t.eval_blocks = eval_blocks;
  return t;
}

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ExperimentConfig build_config(const KeyValues& file_values, const KeyValues& overrides) {
  std::string preset = "desk";
  for (const auto* kv : {&file_values, &overrides})
    for (const auto& [k, v] : *kv)
      if (k == "preset") preset = trim(v);
  if (preset != "desk" && preset != "full") throw ConfigError("preset: expected desk|full, got '" + preset + "'");
  auto cfg = ExperimentConfig::from_preset(preset == "desk" ? Preset::Desk : Preset::Full);
  for (const auto* kv : {&file_values, &overrides})
    for (const auto& [k, v] : *kv) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

// ---- runs ----------------------------------------------------------------------

bool SweepResult::any_diverged() const {
  return std::any_of(points.begin(), points.end(), [](const SweepPoint& p) { return p.diverged; });
}

std::string power_tag(double p_dbm) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%gdBm", p_dbm);
  return buf;
}

void write_resolved(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.resolved");
  out << "# run " << cfg.run_id() << '\n' << "out = " << cfg.out.string() << '\n' << cfg.resolved();
}

void emit_psd_report(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (double p : cfg.power_dbm) emit_psd_point(cfg, p, dir);
}

TrainResult run_training(const ExperimentConfig& cfg, double p_dbm, const std::filesystem::path& dir,
                         const Logger& log) {
  std::filesystem::create_directories(dir);
  const TrainConfig tc = cfg.train_config(p_dbm);
  const std::uint64_t hash = fnv1a64(tc.canonical());
  const auto ckpt = dir / "checkpoint.txt";

  TrainHooks hooks;
  if (std::filesystem::exists(ckpt)) {
    hooks.resume = load_checkpoint(ckpt, hash);
    if (log) log(power_tag(p_dbm) + ": resuming at iteration " + std::to_string(hooks.resume->iteration));
  }
  hooks.checkpoint_every = cfg.checkpoint_every;
  hooks.on_checkpoint = [&](const TrainState& s) { save_checkpoint(ckpt, s, hash); };
  const long report_every = std::max(1L, tc.iterations / 10);
  hooks.on_progress = [&](long it, double loss) {
    if (log && (it % report_every == 0 || it == tc.iterations))
      log(power_tag(p_dbm) + ": iteration " + std::to_string(it) + " loss " + num(loss));
  };

  TrainResult r = train(tc, hooks);
  save_checkpoint(ckpt, r.state, hash);
  {
    CsvWriter csv(dir / "loss.csv", {"iteration", "loss_nats"});
    for (std::size_t i = 0; i < r.state.loss_history.size(); ++i)
      csv.row(std::to_string(i), {r.state.loss_history[i]});
  }
  {
    CsvWriter csv(dir / "eval.csv", {"mi_bits", "mi_stderr_bits", "se_bit_per_s_hz", "ser", "diverged"});
    csv.row({r.evaluation.mi.estimate.mi_bits, r.evaluation.mi.std_error, r.evaluation.se, r.evaluation.ser,
             r.diverged ? 1.0 : 0.0});
  }
  export_learned_artifacts(r.state.model, tc, dir);
  if (log && r.diverged) log(power_tag(p_dbm) + ": diverged: " + r.diagnostic);
  return r;
}

void emit_learned_report(const ExperimentConfig& cfg, double p_dbm, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& dir) {
  const TrainConfig tc = cfg.train_config(p_dbm);
  const TrainState s = load_checkpoint(checkpoint, fnv1a64(tc.canonical()));
  export_learned_artifacts(s.model, tc, dir);
}

SweepResult run_sweep(const ExperimentConfig& cfg, const Logger& log) {
  cfg.validate();
  SweepResult result;
  result.dir = cfg.run_dir();
  std::filesystem::create_directories(result.dir);
  write_resolved(cfg, result.dir);

  std::mutex log_mutex;
  std::ofstream log_file(result.dir / "log.txt");
  auto say = [&](const std::string& line) {
    std::lock_guard lock(log_mutex);
    log_file << line << '\n';
    log_file.flush();
    if (log) log(line);
  };

  const std::size_t n = cfg.power_dbm.size();
  result.points.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      const double p = cfg.power_dbm[i];
      try {
        SweepPoint pt;
        if (cfg.system == SystemKind::Conventional) {
          pt = conventional_point(cfg, p);
          if (cfg.psd) emit_psd_point(cfg, p, result.dir);
        } else {
          const TrainResult r = run_training(cfg, p, result.dir / power_tag(p), say);
          pt.p_dbm = p;
          pt.mi_bits = r.evaluation.mi.estimate.mi_bits;
          pt.mi_stderr = r.evaluation.mi.std_error;
          pt.ser = r.evaluation.ser;
          pt.diverged = r.diverged;
        }
        fill_references(cfg, pt);
        result.points[i] = pt;
        say(power_tag(p) + ": mi " + num(pt.mi_bits) + " bits, ser " + num(pt.ser));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  CsvWriter csv(result.dir / "se.csv",
                {"p_dbm", "snr_db", "mi_bits", "se_bit_per_s_hz", "ser", "seed", "mi_stderr_bits",
                 "shannon_bits", "qam_capacity_bits", "diverged"});
  for (const auto& pt : result.points)
    csv.cells({num(pt.p_dbm), num(pt.snr_db), num(pt.mi_bits), num(pt.se), num(pt.ser), std::to_string(pt.seed),
               num(pt.mi_stderr), num(pt.shannon_bits), num(pt.qam_capacity_bits), pt.diverged ? "1" : "0"});
  return result;
}

}  // namespace fiberae
