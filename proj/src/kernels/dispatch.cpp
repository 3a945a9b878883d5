#include <atomic>
#include <cstdlib>
#include <string>

#include "fedhumor/errors.hpp"
#include "fedhumor/kernels.hpp"
#include "kernel_table.hpp"

namespace fedhumor::simd {
namespace {

using detail::KernelTable;

bool cpu_has_avx2() noexcept {
#if defined(FEDHUMOR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return &detail::scalar_table();
    case Backend::avx2:
#if defined(FEDHUMOR_HAVE_AVX2)
      return cpu_has_avx2() ? &detail::avx2_table() : nullptr;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Backend initial_backend() noexcept {
  if (const char* env = std::getenv("FEDHUMOR_SIMD"); env != nullptr) {
    if (std::string(env) == "scalar") return Backend::scalar;
  }
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

struct State {
  std::atomic<Backend> backend{initial_backend()};
  std::atomic<const KernelTable*> table{table_for(backend.load())};
};

State& state() {
  static State s;
  return s;
}

const KernelTable& kernels() { return *state().table.load(std::memory_order_relaxed); }

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw DomainError("kernel operands differ in length");
}

}  // namespace

std::string_view backend_name(Backend backend) noexcept {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend backend) noexcept { return table_for(backend) != nullptr; }

Backend active_backend() noexcept { return state().backend.load(); }

void set_backend(Backend backend) {
  const KernelTable* table = table_for(backend);
  if (table == nullptr) {
    throw DomainError("kernel backend '" + std::string(backend_name(backend)) +
                      "' is not available on this machine");
  }
  state().backend.store(backend);
  state().table.store(table);
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size());
  return kernels().dot(a.data(), b.data(), a.size());
}

void dot2(std::span<const double> w0, std::span<const double> w1, std::span<const double> x,
          double out[2]) {
  require_same_size(w0.size(), x.size());
  require_same_size(w1.size(), x.size());
  kernels().dot2(w0.data(), w1.data(), x.data(), x.size(), out);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size());
  kernels().axpy(a, x.data(), y.data(), x.size());
}

void axpy2(double a0, double a1, std::span<const double> x, std::span<double> y0,
           std::span<double> y1) {
  require_same_size(x.size(), y0.size());
  require_same_size(x.size(), y1.size());
  kernels().axpy2(a0, a1, x.data(), y0.data(), y1.data(), x.size());
}

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  require_same_size(a.size(), b.size());
  require_same_size(a.size(), out.size());
  kernels().add(a.data(), b.data(), out.data(), a.size());
}

void scale(double s, std::span<double> x) { kernels().scale(s, x.data(), x.size()); }

}  // namespace fedhumor::simd
