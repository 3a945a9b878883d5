#pragma once

// Dense double-precision kernels used by the classifier's inner loops.
//
// Two backends exist: a scalar reference and an AVX2+FMA variant. The active
// backend is chosen once at first use (best available unless the environment
// variable FEDHUMOR_SIMD=scalar is set) and can be switched explicitly, which
// the equivalence tests do. Results of the two backends differ only by
// floating-point reassociation and FMA contraction.

#include <span>
#include <string_view>

namespace fedhumor::simd {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend backend) noexcept;

bool backend_available(Backend backend) noexcept;

Backend active_backend() noexcept;

/// Throws DomainError when the backend was not compiled in or the CPU lacks it.
void set_backend(Backend backend);

/// Restores the previous backend on destruction.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Returns {w0·x, w1·x} in one pass over x.
void dot2(std::span<const double> w0, std::span<const double> w1, std::span<const double> x,
          double out[2]);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// y0 += a0 * x, y1 += a1 * x
void axpy2(double a0, double a1, std::span<const double> x, std::span<double> y0,
           std::span<double> y1);

/// out = a + b (out may alias a or b)
void add(std::span<const double> a, std::span<const double> b, std::span<double> out);

/// x *= s
void scale(double s, std::span<double> x);

}  // namespace fedhumor::simd
