// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only reachable through
// dispatch after a CPUID check.

#include <immintrin.h>

#include "kernel_table.hpp"

namespace fedhumor::simd::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot2(const double* w0, const double* w1, const double* x, std::size_t n, double* out) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  __m256d b0 = _mm256_setzero_pd();
  __m256d b1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d x0 = _mm256_loadu_pd(x + i);
    const __m256d x1 = _mm256_loadu_pd(x + i + 4);
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + i), x0, a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + i + 4), x1, a1);
    b0 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + i), x0, b0);
    b1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + i + 4), x1, b1);
  }
  double s0 = hsum(_mm256_add_pd(a0, a1));
  double s1 = hsum(_mm256_add_pd(b0, b1));
  for (; i < n; ++i) {
    s0 += w0[i] * x[i];
    s1 += w1[i] * x[i];
  }
  out[0] = s0;
  out[1] = s1;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy2(double a0, double a1, const double* x, double* y0, double* y1, std::size_t n) {
  const __m256d va0 = _mm256_set1_pd(a0);
  const __m256d va1 = _mm256_set1_pd(a1);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y0 + i, _mm256_fmadd_pd(va0, vx, _mm256_loadu_pd(y0 + i)));
    _mm256_storeu_pd(y1 + i, _mm256_fmadd_pd(va1, vx, _mm256_loadu_pd(y1 + i)));
  }
  for (; i < n; ++i) {
    y0[i] += a0 * x[i];
    y1[i] += a1 * x[i];
  }
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void scale(double s, double* x, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= s;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{&dot, &dot2, &axpy, &axpy2, &add, &scale};
  return table;
}

}  // namespace fedhumor::simd::detail
