#include "gcm/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace gcm::kernels {
namespace {

// One output row: c_row (+)= op(A)[i,:] * op(B).
inline void gemm_row(std::size_t i, GemmShape s, Trans ta, Trans tb,
                     const double* a, const double* b, double* c_row,
                     bool accumulate) {
  if (!accumulate) std::fill(c_row, c_row + s.n, 0.0);
  if (tb == Trans::yes && ta == Trans::no) {
    // Rows of B are contiguous: one dot product per output entry.
    const double* a_row = a + i * s.k;
    for (std::size_t j = 0; j < s.n; ++j) {
      const double* b_row = b + j * s.k;
      double acc = 0.0;
      for (std::size_t p = 0; p < s.k; ++p) acc += a_row[p] * b_row[p];
      c_row[j] += acc;
    }
    return;
  }
  for (std::size_t p = 0; p < s.k; ++p) {
    const double av = ta == Trans::no ? a[i * s.k + p] : a[p * s.m + i];
    if (av == 0.0) continue;
    if (tb == Trans::no) {
      const double* b_row = b + p * s.n;
      for (std::size_t j = 0; j < s.n; ++j) c_row[j] += av * b_row[j];
    } else {
      for (std::size_t j = 0; j < s.n; ++j) c_row[j] += av * b[j * s.k + p];
    }
  }
}

}  // namespace

namespace serial {
void gemm(GemmShape s, Trans ta, Trans tb, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < s.m; ++i)
    gemm_row(i, s, ta, tb, a.data(), b.data(), c.data() + i * s.n, accumulate);
}
}  // namespace serial

namespace parallel {
void gemm(GemmShape s, Trans ta, Trans tb, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate) {
  const auto m = static_cast<std::ptrdiff_t>(s.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i)
    gemm_row(static_cast<std::size_t>(i), s, ta, tb, a.data(), b.data(),
             c.data() + static_cast<std::size_t>(i) * s.n, accumulate);
}
}  // namespace parallel

void gemm(GemmShape s, Trans ta, Trans tb, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate) {
  if (s.m * s.k * s.n >= kParallelThreshold && s.m > 1 && !omp_in_parallel() &&
      omp_get_max_threads() > 1) {
    parallel::gemm(s, ta, tb, a, b, c, accumulate);
  } else {
    serial::gemm(s, ta, tb, a, b, c, accumulate);
  }
}

}  // namespace gcm::kernels
