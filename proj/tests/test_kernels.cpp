#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "elp/kernels.hpp"
#include "elp/rng.hpp"

using namespace elp;
namespace k = elp::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// independent triple-loop reference
void naive_gemm(const std::vector<double>& a, const std::vector<double>& b,
                std::vector<double>& c, std::size_t m, std::size_t kk, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < kk; ++p) acc += a[i * kk + p] * b[p * n + j];
      c[i * n + j] += acc;
    }
}

struct BackendGuard {
  k::Backend saved;
  BackendGuard() : saved(k::active_backend()) {}
  ~BackendGuard() { k::set_backend(saved); }
};

}  // namespace

TEST_CASE("gemm matches triple-loop oracle on both backends") {
  Rng rng(42);
  BackendGuard guard;
  for (auto backend : {k::Backend::Scalar, k::Backend::Avx2}) {
    if (backend == k::Backend::Avx2 && !k::avx2_supported()) continue;
    k::set_backend(backend);
    for (int iter = 0; iter < 20; ++iter) {
      std::size_t m = 1 + rng.uniform_index(12);
      std::size_t kk = 1 + rng.uniform_index(12);
      std::size_t n = 1 + rng.uniform_index(12);
      auto a = random_vec(rng, m * kk);
      auto b = random_vec(rng, kk * n);
      std::vector<double> c(m * n, 0.0), ref(m * n, 0.0);
      k::gemm(a.data(), b.data(), c.data(), m, kk, n);
      naive_gemm(a, b, ref, m, kk, n);
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gemm_at and gemm_bt match explicit transposed products") {
  Rng rng(7);
  const std::size_t m = 5, kk = 7, n = 6;
  auto a = random_vec(rng, m * kk);
  auto b = random_vec(rng, m * n);
  // c(KxN) += a^T b
  std::vector<double> c(kk * n, 0.0), ref(kk * n, 0.0);
  k::gemm_at(a.data(), b.data(), c.data(), m, kk, n);
  for (std::size_t p = 0; p < kk; ++p)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) ref[p * n + j] += a[i * kk + p] * b[i * n + j];
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));

  // d(MxK) += g b2^T where g is MxN, b2 is KxN
  auto g = random_vec(rng, m * n);
  auto b2 = random_vec(rng, kk * n);
  std::vector<double> d(m * kk, 0.0), dref(m * kk, 0.0);
  k::gemm_bt(g.data(), b2.data(), d.data(), m, kk, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < kk; ++p)
      for (std::size_t j = 0; j < n; ++j) dref[i * kk + p] += g[i * n + j] * b2[p * n + j];
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(dref[i]).epsilon(1e-12));
}

TEST_CASE("elementwise kernels agree between scalar and AVX2 backends") {
  if (!k::avx2_supported()) return;
  Rng rng(11);
  BackendGuard guard;
  for (std::size_t n : {1u, 3u, 4u, 17u, 64u, 257u}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    std::vector<double> s1(n), s2(n);

    k::set_backend(k::Backend::Scalar);
    k::add(a.data(), b.data(), s1.data(), n);
    double dot1 = k::dot(a.data(), b.data(), n);
    double sum1 = k::sum(a.data(), n);
    std::vector<double> y1 = b;
    k::axpy(0.7, a.data(), y1.data(), n);
    std::vector<double> r1(n);
    k::relu(a.data(), r1.data(), n);

    k::set_backend(k::Backend::Avx2);
    k::add(a.data(), b.data(), s2.data(), n);
    double dot2 = k::dot(a.data(), b.data(), n);
    double sum2 = k::sum(a.data(), n);
    std::vector<double> y2 = b;
    k::axpy(0.7, a.data(), y2.data(), n);
    std::vector<double> r2(n);
    k::relu(a.data(), r2.data(), n);

    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s1[i] == s2[i]);
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
      CHECK(r1[i] == r2[i]);
    }
    CHECK(dot1 == doctest::Approx(dot2).epsilon(1e-12));
    CHECK(sum1 == doctest::Approx(sum2).epsilon(1e-12));
  }
}

TEST_CASE("sub mul scale basics") {
  double a[5] = {1, -2, 3, -4, 5};
  double b[5] = {2, 2, 2, 2, 2};
  double out[5];
  k::sub(a, b, out, 5);
  CHECK(out[0] == -1.0);
  CHECK(out[4] == 3.0);
  k::mul(a, b, out, 5);
  CHECK(out[1] == -4.0);
  k::scale(a, -1.0, out, 5);
  CHECK(out[2] == -3.0);
}
