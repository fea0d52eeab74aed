#include "fiberae/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace fiberae::dft {
namespace {

// The FFTW planner is not thread-safe; execution of an existing plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign, bool inplace) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(n, sign, inplace);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    auto* in = fftw_alloc_complex(n);
    auto* out = inplace ? in : fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!inplace) fftw_free(out);
    fftw_free(in);
    if (plan == nullptr) throw std::runtime_error("fftw: planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, int, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const cplx* p) { return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p)); }

void scale(std::span<cplx> x) {
  const double s = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto& v : x) v *= s;
}

CVec transform(std::span<const cplx> x, int sign) {
  if (x.empty()) throw std::invalid_argument("fft: empty input");
  CVec out(x.size());
  fftw_execute_dft(cache().get(x.size(), sign, false), as_fftw(x.data()), as_fftw(out.data()));
  scale(out);
  return out;
}

void transform_inplace(std::span<cplx> x, int sign) {
  if (x.empty()) throw std::invalid_argument("fft: empty input");
  fftw_execute_dft(cache().get(x.size(), sign, true), as_fftw(x.data()), as_fftw(x.data()));
  scale(x);
}

}  // namespace

CVec forward(std::span<const cplx> x) { return transform(x, FFTW_FORWARD); }
CVec inverse(std::span<const cplx> x) { return transform(x, FFTW_BACKWARD); }
void forward_inplace(std::span<cplx> x) { transform_inplace(x, FFTW_FORWARD); }
void inverse_inplace(std::span<cplx> x) { transform_inplace(x, FFTW_BACKWARD); }

}  // namespace fiberae::dft
