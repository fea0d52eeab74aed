// Batch front-end: sweep, train, report, gradcheck, selftest.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical
// divergence, 3 internal error or failed self-test.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include "fiberae/acceptance.hpp"
#include "fiberae/checkpoint.hpp"
#include "fiberae/csv.hpp"
#include "fiberae/experiment.hpp"

namespace {

using namespace fiberae;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitInternal = 3;

struct CommonFlags {
  std::string config;
  std::string preset;
  std::string seed;
  std::string out;
  std::vector<double> power_dbm;
  std::string channel;
  std::string system;
  std::string n_adj;
  std::string iterations;
  std::string threads;
  std::vector<std::string> set;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "desk | full")->check(CLI::IsMember({"desk", "full"}));
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output root directory");
  cmd->add_option("--power-dbm", f.power_dbm, "launch power in dBm (repeatable)")->allow_extra_args(false);
  cmd->add_option("--channel", f.channel, "a | ad | adn")->check(CLI::IsMember({"a", "ad", "adn"}));
  cmd->add_option("--system", f.system, "conv | ae")->check(CLI::IsMember({"conv", "ae"}));
  cmd->add_option("--n-adj", f.n_adj, "receiver half-window N_adj");
  cmd->add_option("--iterations", f.iterations, "training iterations");
  cmd->add_option("--threads", f.threads, "sweep worker threads (0: all cores)");
  cmd->add_option("--set", f.set, "extra key=value override (repeatable)");
}

ExperimentConfig resolve(const CommonFlags& f) {
  KeyValues file = f.config.empty() ? KeyValues{} : read_config_file(f.config);
  KeyValues over;
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) over.emplace_back(key, v);
  };
  put("preset", f.preset);
  put("seed", f.seed);
  put("out", f.out);
  put("channel", f.channel);
  put("system", f.system);
  put("n_adj", f.n_adj);
  put("iterations", f.iterations);
  put("threads", f.threads);
  if (!f.power_dbm.empty()) {
    std::string grid;
    for (double p : f.power_dbm) grid += (grid.empty() ? "" : ",") + format_number(p);
    over.emplace_back("power_dbm", grid);
  }
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    over.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return build_config(file, over);
}

Logger stderr_logger() {
  static std::mutex m;
  return [](const std::string& line) {
    std::lock_guard lock(m);
    std::cerr << line << std::endl;
  };
}

int cmd_sweep(const CommonFlags& f) {
  const auto cfg = resolve(f);
  const auto r = run_sweep(cfg, stderr_logger());
  std::cout << "wrote " << (r.dir / "se.csv").string() << '\n';
  for (const auto& p : r.points)
    std::printf("P=%6.2f dBm  SNR=%6.2f dB  MI=%.4f bit  SER=%.4g%s\n", p.p_dbm, p.snr_db, p.mi_bits, p.ser,
                p.diverged ? "  DIVERGED" : "");
  return r.any_diverged() ? kExitDiverged : kExitOk;
}

int cmd_train(CommonFlags f, const std::string& resume) {
  if (f.system.empty()) f.system = "ae";
  const auto cfg = resolve(f);
  if (cfg.system != SystemKind::Autoencoder) throw ConfigError("train requires system = ae");
  const double p = cfg.power_dbm.front();
  const auto dir = cfg.run_dir() / power_tag(p);
  write_resolved(cfg, cfg.run_dir());
  if (!resume.empty()) {
    const auto hash = fnv1a64(cfg.train_config(p).canonical());
    (void)load_checkpoint(resume, hash);
    std::filesystem::create_directories(dir);
    if (std::filesystem::absolute(resume) != std::filesystem::absolute(dir / "checkpoint.txt"))
      std::filesystem::copy_file(resume, dir / "checkpoint.txt", std::filesystem::copy_options::overwrite_existing);
  }
  const auto r = run_training(cfg, p, dir, stderr_logger());
  std::printf("P=%.2f dBm  MI=%.4f +- %.4f bit  SE=%.4f  SER=%.4g  iterations=%ld\n", p,
              r.evaluation.mi.estimate.mi_bits, r.evaluation.mi.std_error, r.evaluation.se, r.evaluation.ser,
              r.state.iteration);
  std::cout << "wrote " << dir.string() << '\n';
  if (r.diverged) {
    std::cerr << "training diverged: " << r.diagnostic << '\n';
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_report(const CommonFlags& f, const std::string& checkpoint) {
  const auto cfg = resolve(f);
  const auto dir = cfg.run_dir() / "report";
  write_resolved(cfg, cfg.run_dir());
  if (cfg.system == SystemKind::Conventional) {
    emit_psd_report(cfg, dir);
  } else {
    for (double p : cfg.power_dbm) {
      const auto ckpt = checkpoint.empty() ? cfg.run_dir() / power_tag(p) / "checkpoint.txt"
                                           : std::filesystem::path(checkpoint);
      emit_learned_report(cfg, p, ckpt, dir / power_tag(p));
    }
  }
  std::cout << "wrote " << dir.string() << '\n';
  return kExitOk;
}

int cmd_gradcheck(const CommonFlags& f) {
  const auto cfg = resolve(f);
  double worst = 0.0;
  for (const auto& e : run_gradcheck_suite(cfg.seed)) {
    std::printf("%-24s %.3e\n", e.name.c_str(), e.max_rel_error);
    worst = std::max(worst, e.max_rel_error);
  }
  std::printf("max relative error %.3e (limit 1e-4)\n", worst);
  return worst < 1e-4 ? kExitOk : kExitInternal;
}

int cmd_selftest(const CommonFlags& f, const std::vector<int>& criteria) {
  const auto cfg = resolve(f);
  AcceptanceOptions opt;
  opt.seed = cfg.seed;
  opt.work_dir = cfg.run_dir() / "selftest";
  opt.only = {criteria.begin(), criteria.end()};
  opt.on_result = [](const CriterionResult& r) { std::cout << format_result(r) << std::endl; };
  const auto results = run_acceptance(opt);
  const auto failed = std::count_if(results.begin(), results.end(),
                                    [](const CriterionResult& r) { return r.gated && !r.passed; });
  std::cout << (failed == 0 ? "selftest passed" : "selftest FAILED: " + std::to_string(failed) + " criteria")
            << std::endl;
  return failed == 0 ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber-channel autoencoder experiments"};
  app.require_subcommand(1);

  CommonFlags sweep_f, train_f, report_f, grad_f, self_f;
  std::string resume, checkpoint;
  std::vector<int> criteria;

  auto* sweep = app.add_subcommand("sweep", "SE over launch power for the conventional or AE system");
  add_common(sweep, sweep_f);
  auto* train = app.add_subcommand("train", "train one AE at the first configured power");
  add_common(train, train_f);
  train->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  auto* report = app.add_subcommand("report", "PSD report (conv) or learned-artifact report (ae)");
  add_common(report, report_f);
  report->add_option("--checkpoint", checkpoint, "checkpoint file (default: the run directory's)");
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every tape primitive");
  add_common(grad, grad_f);
  auto* self = app.add_subcommand("selftest", "run the acceptance criteria");
  add_common(self, self_f);
  self->add_option("--criteria", criteria, "subset of criterion ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sweep) return cmd_sweep(sweep_f);
    if (*train) return cmd_train(train_f, resume);
    if (*report) return cmd_report(report_f, checkpoint);
    if (*grad) return cmd_gradcheck(grad_f);
    if (*self) return cmd_selftest(self_f, criteria);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
