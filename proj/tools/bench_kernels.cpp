// Times the serial reference kernels against the OpenMP versions and checks
// that both produce bit-identical output.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctor/kernels.hpp"
#include "doctor/rng.hpp"

using namespace doctor;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> rand_buf(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void bench_matmul(int n, int reps) {
  Rng rng(1);
  auto a = rand_buf(static_cast<std::size_t>(n) * n, rng);
  auto b = rand_buf(static_cast<std::size_t>(n) * n, rng);
  std::vector<double> cs(static_cast<std::size_t>(n) * n), cp(cs);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    std::fill(cs.begin(), cs.end(), 0.0);
    kernels::serial::matmul(a.data(), b.data(), cs.data(), n, n, n);
  }
  const double ts = ms_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    std::fill(cp.begin(), cp.end(), 0.0);
    kernels::parallel::matmul(a.data(), b.data(), cp.data(), n, n, n);
  }
  const double tp = ms_since(t0) / reps;

  std::printf("matmul  %4dx%-4d serial %8.2f ms  openmp %8.2f ms  speedup %.2fx  bitwise %s\n", n, n, ts, tp,
              ts / tp, cs == cp ? "equal" : "DIFFER");
}

void bench_conv2d(int n, int c, int reps) {
  Rng rng(2);
  auto x = rand_buf(static_cast<std::size_t>(n) * n * c, rng);
  auto w = rand_buf(static_cast<std::size_t>(3) * 3 * c * c, rng);
  auto bias = rand_buf(static_cast<std::size_t>(c), rng);
  const int ho = kernels::conv_out_dim(n, 3, 2, 1);
  std::vector<double> os(static_cast<std::size_t>(ho) * ho * c), op(os);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    std::fill(os.begin(), os.end(), 0.0);
    kernels::serial::conv2d(x.data(), w.data(), bias.data(), os.data(), n, n, c, 3, 3, c, 2, 1);
  }
  const double ts = ms_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    std::fill(op.begin(), op.end(), 0.0);
    kernels::parallel::conv2d(x.data(), w.data(), bias.data(), op.data(), n, n, c, 3, 3, c, 2, 1);
  }
  const double tp = ms_since(t0) / reps;

  std::printf("conv2d  %4dx%-4d serial %8.2f ms  openmp %8.2f ms  speedup %.2fx  bitwise %s\n", n, c, ts, tp,
              ts / tp, os == op ? "equal" : "DIFFER");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp not enabled; parallel namespace runs serially\n");
#endif
  bench_matmul(128, 20);
  bench_matmul(256, 8);
  bench_matmul(384, 4);
  bench_conv2d(128, 8, 10);
  bench_conv2d(256, 8, 4);
  return 0;
}
