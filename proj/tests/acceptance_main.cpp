// One line per acceptance criterion; exit status 1 if any gated criterion fails.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "fiberae/acceptance.hpp"

int main(int argc, char** argv) {
  fiberae::AcceptanceOptions opt;
  opt.work_dir = std::filesystem::temp_directory_path() / "fiberae_acceptance";
  for (int i = 1; i < argc; ++i) opt.only.insert(std::atoi(argv[i]));
  opt.on_result = [](const fiberae::CriterionResult& r) { std::cout << fiberae::format_result(r) << std::endl; };
  const auto results = fiberae::run_acceptance(opt);
  const auto failed = std::count_if(results.begin(), results.end(),
                                    [](const fiberae::CriterionResult& r) { return r.gated && !r.passed; });
  std::cout << results.size() << " criteria, " << failed << " gated failures" << std::endl;
  std::filesystem::remove_all(opt.work_dir);
  return failed == 0 ? 0 : 1;
}
