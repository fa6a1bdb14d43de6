#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace snse::detail {
namespace {

struct PlanPair {
  fftw_plan backward = nullptr;
  fftw_plan forward = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, plans] : plans_) {
      fftw_destroy_plan(plans.backward);
      fftw_destroy_plan(plans.forward);
    }
  }

  const PlanPair& get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<Complex> a(static_cast<std::size_t>(n) * n), b(a.size());
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair plans{fftw_plan_dft_2d(n, n, in, out, FFTW_BACKWARD, flags),
                   fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, flags)};
    return plans_.emplace(n, plans).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

inline int wrap(int k, int m) { return k < 0 ? k + m : k; }

}  // namespace

void synthesize(const SpectralGrid& grid, std::span<const Complex> box, int points,
                std::vector<Complex>& physical) {
  const int K = grid.max_wavenumber();
  const std::size_t total = static_cast<std::size_t>(points) * points;
  thread_local std::vector<Complex> scratch;
  scratch.assign(total, Complex{});
  for (int k1 = -K; k1 <= K; ++k1) {
    const std::size_t row = static_cast<std::size_t>(wrap(k1, points)) * points;
    for (int k2 = -K; k2 <= K; ++k2) {
      scratch[row + wrap(k2, points)] = box[grid.index({k1, k2})];
    }
  }
  physical.resize(total);
  const auto& plans = cache().get(points);
  fftw_execute_dft(plans.backward, reinterpret_cast<fftw_complex*>(scratch.data()),
                   reinterpret_cast<fftw_complex*>(physical.data()));
}

void analyze(const SpectralGrid& grid, std::span<const Complex> physical, int points,
             std::vector<Complex>& box) {
  const int K = grid.max_wavenumber();
  const std::size_t total = static_cast<std::size_t>(points) * points;
  thread_local std::vector<Complex> input, spectrum;
  input.assign(physical.begin(), physical.end());
  spectrum.resize(total);
  const auto& plans = cache().get(points);
  fftw_execute_dft(plans.forward, reinterpret_cast<fftw_complex*>(input.data()),
                   reinterpret_cast<fftw_complex*>(spectrum.data()));
  const double scale = 1.0 / static_cast<double>(total);
  box.assign(grid.size(), Complex{});
  for (int k1 = -K; k1 <= K; ++k1) {
    const std::size_t row = static_cast<std::size_t>(wrap(k1, points)) * points;
    for (int k2 = -K; k2 <= K; ++k2) {
      box[grid.index({k1, k2})] = spectrum[row + wrap(k2, points)] * scale;
    }
  }
}

void split_real_pair(const SpectralGrid& grid, std::span<const Complex> packed,
                     std::vector<Complex>& a, std::vector<Complex>& b) {
  const std::size_t n = grid.size();
  a.resize(n);
  b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex f = packed[i];
    const Complex g = std::conj(packed[grid.mirror(i)]);
    a[i] = 0.5 * (f + g);
    b[i] = Complex(0.0, -0.5) * (f - g);
  }
}

}  // namespace snse::detail
