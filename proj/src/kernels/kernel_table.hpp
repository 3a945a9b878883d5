#pragma once

// Raw-pointer kernel table shared by the scalar and AVX2 translation units.
// Kept free of standard-library templates so the AVX2 unit cannot emit
// ISA-specific copies of inline functions that the linker might pick up.

#include <cstddef>

namespace fedhumor::simd::detail {

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[0] = w0·x, out[1] = w1·x
  void (*dot2)(const double* w0, const double* w1, const double* x, std::size_t n, double* out);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y0 += a0 * x; y1 += a1 * x
  void (*axpy2)(double a0, double a1, const double* x, double* y0, double* y1, std::size_t n);
  // out = a + b
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  // x *= s
  void (*scale)(double s, double* x, std::size_t n);
};

const KernelTable& scalar_table();

#if defined(FEDHUMOR_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace fedhumor::simd::detail
