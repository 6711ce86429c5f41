#pragma once

#include <cstddef>
#include <span>

// Dense row-major GEMM kernels.
//
// Every kernel computes C (+)= op(A) * op(B) where op is identity or transpose.
// `serial` is the reference implementation kept for testing; `parallel`
// distributes rows of C over OpenMP threads. Both run the same inner loop per
// output row, so their results are bit-identical.

namespace gcm::kernels {

enum class Trans { no, yes };

struct GemmShape {
  std::size_t m = 0;  // rows of op(A) and C
  std::size_t k = 0;  // cols of op(A), rows of op(B)
  std::size_t n = 0;  // cols of op(B) and C
};

namespace serial {
void gemm(GemmShape s, Trans ta, Trans tb, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);
}

namespace parallel {
void gemm(GemmShape s, Trans ta, Trans tb, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);
}

// Work size (m*k*n) above which gemm() hands off to the parallel kernel.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

// Dispatches to parallel::gemm for large products when not already inside a
// parallel region, otherwise serial::gemm.
void gemm(GemmShape s, Trans ta, Trans tb, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);

}  // namespace gcm::kernels
