#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace fiberae {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool gated = true;  // false: informational only
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  std::filesystem::path work_dir = "acceptance_work";
  std::set<int> only;  // empty: all criteria
  long ae_awgn_iterations = 1000;
  long ae_cd_iterations = 2000;
  std::function<void(const CriterionResult&)> on_result;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

/// `[PASS] C<id> <name>: <detail> (<seconds> s)`.
std::string format_result(const CriterionResult& r);

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

/// Finite-difference checks of every tape primitive on random inputs and of the
/// composed transmitter + 4-step split-step graph.
std::vector<GradcheckEntry> run_gradcheck_suite(std::uint64_t seed);

}  // namespace fiberae
