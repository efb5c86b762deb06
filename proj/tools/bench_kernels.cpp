// Compares the OpenMP kernels against the serial reference implementations:
// checks bitwise agreement, then reports wall time and speedup per kernel.
//
//   bench_kernels [size] [repeats]

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "season/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;
namespace k = season::kernels;

std::vector<double> random_vec(int64_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

template <typename F>
double time_best_of(int repeats, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const std::string& name, double serial_ms, double parallel_ms,
            bool equal) {
  std::printf("%-22s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   %s\n",
              name.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms,
              equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 384;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
#ifdef _OPENMP
  std::printf("threads: %d, size: %d, repeats: %d\n", omp_get_max_threads(), n,
              repeats);
#else
  std::printf("threads: 1 (no OpenMP), size: %d, repeats: %d\n", n, repeats);
#endif

  const auto a = random_vec(int64_t(n) * n, 1);
  const auto b = random_vec(int64_t(n) * n, 2);
  std::vector<double> c_serial(int64_t(n) * n), c_omp(int64_t(n) * n);

  {
    const double ts = time_best_of(repeats, [&] {
      k::serial::matmul_nn(a.data(), b.data(), c_serial.data(), n, n, n);
    });
    const double tp = time_best_of(repeats, [&] {
      k::matmul_nn(a.data(), b.data(), c_omp.data(), n, n, n);
    });
    report("matmul_nn", ts, tp, c_serial == c_omp);
  }
  {
    const double ts = time_best_of(repeats, [&] {
      k::serial::matmul_nt(a.data(), b.data(), c_serial.data(), n, n, n);
    });
    const double tp = time_best_of(repeats, [&] {
      k::matmul_nt(a.data(), b.data(), c_omp.data(), n, n, n);
    });
    report("matmul_nt", ts, tp, c_serial == c_omp);
  }
  {
    const double ts = time_best_of(repeats, [&] {
      k::serial::matmul_tn(a.data(), b.data(), c_serial.data(), n, n, n);
    });
    const double tp = time_best_of(repeats, [&] {
      k::matmul_tn(a.data(), b.data(), c_omp.data(), n, n, n);
    });
    report("matmul_tn", ts, tp, c_serial == c_omp);
  }

  const int rows = n * 8, cols = n;
  const auto x = random_vec(int64_t(rows) * cols, 3);
  std::vector<double> y_serial(x.size()), y_omp(x.size());
  {
    const double ts = time_best_of(repeats, [&] {
      k::serial::softmax_rows(x.data(), y_serial.data(), rows, cols, 1.0);
    });
    const double tp = time_best_of(repeats, [&] {
      k::softmax_rows(x.data(), y_omp.data(), rows, cols, 1.0);
    });
    report("softmax_rows", ts, tp, y_serial == y_omp);
  }
  {
    const auto gain = random_vec(cols, 4);
    const auto bias = random_vec(cols, 5);
    std::vector<double> m1(rows), s1(rows), m2(rows), s2(rows);
    const double ts = time_best_of(repeats, [&] {
      k::serial::layer_norm_rows(x.data(), gain.data(), bias.data(),
                                 y_serial.data(), m1.data(), s1.data(), rows,
                                 cols, 1e-5);
    });
    const double tp = time_best_of(repeats, [&] {
      k::layer_norm_rows(x.data(), gain.data(), bias.data(), y_omp.data(),
                         m2.data(), s2.data(), rows, cols, 1e-5);
    });
    report("layer_norm_rows", ts, tp, y_serial == y_omp);
  }
  {
    const double ts = time_best_of(repeats, [&] {
      k::serial::gelu(x.data(), y_serial.data(), x.size());
    });
    const double tp = time_best_of(
        repeats, [&] { k::gelu(x.data(), y_omp.data(), x.size()); });
    report("gelu", ts, tp, y_serial == y_omp);
  }
  return 0;
}
