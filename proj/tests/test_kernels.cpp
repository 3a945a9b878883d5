#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fedhumor/errors.hpp"
#include "fedhumor/kernels.hpp"

using namespace fedhumor;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Naive long-double reference, independent of both backends.
double reference_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 63, 100, 4096, 4099};

}  // namespace

TEST_CASE("scalar backend is always available and selectable") {
  CHECK(simd::backend_available(simd::Backend::scalar));
  simd::ScopedBackend scope(simd::Backend::scalar);
  CHECK(simd::active_backend() == simd::Backend::scalar);
  CHECK(simd::backend_name(simd::Backend::scalar) == "scalar");
}

TEST_CASE("unavailable backend is rejected") {
  if (simd::backend_available(simd::Backend::avx2)) return;
  CHECK_THROWS_AS(simd::set_backend(simd::Backend::avx2), DomainError);
}

TEST_CASE("mismatched operand lengths are rejected") {
  std::vector<double> a(4), b(5);
  CHECK_THROWS_AS(simd::dot(a, b), DomainError);
  CHECK_THROWS_AS(simd::axpy(1.0, a, b), DomainError);
}

TEST_CASE("each backend matches the long-double reference") {
  std::mt19937_64 rng(11);
  for (auto backend : {simd::Backend::scalar, simd::Backend::avx2}) {
    if (!simd::backend_available(backend)) continue;
    simd::ScopedBackend scope(backend);
    CAPTURE(simd::backend_name(backend));
    for (std::size_t n : kLengths) {
      CAPTURE(n);
      const auto a = random_vector(n, rng);
      const auto b = random_vector(n, rng);
      const auto c = random_vector(n, rng);
      const double ref = reference_dot(a, b);
      CHECK(std::abs(simd::dot(a, b) - ref) <= 1e-12 * (1.0 + std::sqrt(double(n))));

      double two[2];
      simd::dot2(a, c, b, two);
      CHECK(std::abs(two[0] - ref) <= 1e-12 * (1.0 + std::sqrt(double(n))));
      CHECK(std::abs(two[1] - reference_dot(c, b)) <= 1e-12 * (1.0 + std::sqrt(double(n))));

      auto y = c;
      simd::axpy(0.75, a, y);
      auto y0 = c;
      auto y1 = b;
      simd::axpy2(-1.5, 2.0, a, y0, y1);
      std::vector<double> sum(n);
      simd::add(a, b, sum);
      auto scaled = a;
      simd::scale(-3.0, scaled);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(y[i] == doctest::Approx(c[i] + 0.75 * a[i]).epsilon(1e-15));
        CHECK(y0[i] == doctest::Approx(c[i] - 1.5 * a[i]).epsilon(1e-15));
        CHECK(y1[i] == doctest::Approx(b[i] + 2.0 * a[i]).epsilon(1e-15));
        CHECK(sum[i] == a[i] + b[i]);
        CHECK(scaled[i] == -3.0 * a[i]);
      }
    }
  }
}

TEST_CASE("avx2 and scalar kernels agree") {
  if (!simd::backend_available(simd::Backend::avx2)) {
    MESSAGE("AVX2 not available; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> len(0, 5000);
    const std::size_t n = len(rng);
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    const auto x = random_vector(n, rng);

    auto run = [&](simd::Backend backend) {
      simd::ScopedBackend scope(backend);
      struct Out {
        double dot;
        double two[2];
        std::vector<double> y0, y1, sum, scaled;
      } out;
      out.dot = simd::dot(a, b);
      simd::dot2(a, b, x, out.two);
      out.y0 = a;
      out.y1 = b;
      simd::axpy2(0.3, -0.7, x, out.y0, out.y1);
      simd::axpy(1.25, x, out.y0);
      out.sum.resize(n);
      simd::add(a, b, out.sum);
      out.scaled = x;
      simd::scale(0.125, out.scaled);
      return out;
    };
    const auto s = run(simd::Backend::scalar);
    const auto v = run(simd::Backend::avx2);
    const double tol = 1e-12 * (1.0 + std::sqrt(double(n)));
    CHECK(std::abs(s.dot - v.dot) <= tol);
    CHECK(std::abs(s.two[0] - v.two[0]) <= tol);
    CHECK(std::abs(s.two[1] - v.two[1]) <= tol);
    for (std::size_t i = 0; i < n; ++i) {
      // FMA contraction changes only the final rounding.
      CHECK(std::abs(s.y0[i] - v.y0[i]) <= 1e-14);
      CHECK(std::abs(s.y1[i] - v.y1[i]) <= 1e-14);
    }
    CHECK(s.sum == v.sum);
    CHECK(s.scaled == v.scaled);
  }
}
