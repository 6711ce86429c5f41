// Serial vs OpenMP timings for the GEMM kernels and for one training batch.
// Usage: gcm_bench [threads]   (default: OpenMP runtime default)

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "gcm/kernels.hpp"
#include "gcm/synthetic.hpp"
#include "gcm/train.hpp"

using namespace gcm;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void bench_gemm(std::size_t m, std::size_t k, std::size_t n, kernels::Trans ta, kernels::Trans tb) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  std::vector<double> a(m * k), b(k * n), c(m * n);
  for (auto& x : a) x = d(rng);
  for (auto& x : b) x = d(rng);
  const kernels::GemmShape s{m, k, n};
  const double serial = best_of(5, [&] { kernels::serial::gemm(s, ta, tb, a, b, c, false); });
  const double parallel = best_of(5, [&] { kernels::parallel::gemm(s, ta, tb, a, b, c, false); });
  const double gflop = 2.0 * static_cast<double>(m * k * n) * 1e-9;
  std::printf("gemm %4zux%4zux%4zu %c%c  serial %8.3f ms (%5.2f GF/s)  parallel %8.3f ms (%5.2f GF/s)\n", m, k,
              n, ta == kernels::Trans::yes ? 'T' : 'N', tb == kernels::Trans::yes ? 'T' : 'N', serial * 1e3,
              gflop / serial, parallel * 1e3, gflop / parallel);
}

void bench_batch(HeadKind head, const std::vector<Example>& data, std::size_t classes, int threads) {
  ModelArch arch;
  arch.head = head;
  arch.input_dim = data.front().Z.cols();
  arch.hidden_size = 32;
  arch.classes = classes;
  for (int t : {1, threads}) {
    BenchmarkOptions opts;
    opts.threads = t;
    const auto r = benchmark(TaggerModel(arch, 1), data, LearningRates{}, opts);
    std::printf("train_batch %-8s threads %2d  %8.1f it/s\n", to_string(head).c_str(), t,
                r.iterations_per_second);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  omp_set_num_threads(threads);
  std::printf("OpenMP threads: %d\n", threads);
  using kernels::Trans;
  for (std::size_t size : {64, 256, 512}) bench_gemm(size, size, size, Trans::no, Trans::no);
  bench_gemm(256, 256, 256, Trans::yes, Trans::no);
  bench_gemm(256, 256, 256, Trans::no, Trans::yes);
  // Shapes of one sentence step at hidden 32: input projection and gate block.
  bench_gemm(12, 16, 128, Trans::no, Trans::no);
  bench_gemm(12, 64, 64, Trans::no, Trans::no);

  SyntheticSpec spec;
  spec.train = 400;
  const auto task = make_synthetic_task(spec);
  const auto data = make_examples(task.train, task.embeddings);
  for (HeadKind h : {HeadKind::plain, HeadKind::context, HeadKind::crf})
    bench_batch(h, data, task.scheme.size(), threads);
}
