// Scalar reference kernels. Strictly sequential left-to-right accumulation;
// the SIMD variants are tested against these.

#include "kernel_table.hpp"

namespace fedhumor::simd::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot2(const double* w0, const double* w1, const double* x, std::size_t n, double* out) {
  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s0 += w0[i] * x[i];
    s1 += w1[i] * x[i];
  }
  out[0] = s0;
  out[1] = s1;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy2(double a0, double a1, const double* x, double* y0, double* y1, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y0[i] += a0 * x[i];
    y1[i] += a1 * x[i];
  }
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void scale(double s, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{&dot, &dot2, &axpy, &axpy2, &add, &scale};
  return table;
}

}  // namespace fedhumor::simd::detail
