#include "vitalrr/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace vitalrr {

namespace {

// The FFTW planner is not reentrant; plans are cached per size and executed
// with the new-array interface, which is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(n, in, in, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void fft_forward(std::span<std::complex<double>> data) {
  if (data.size() < 2) return;
  const int n = static_cast<int>(data.size());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(n), p, p);
}

}  // namespace vitalrr
