#include "elp/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace elp::kernels {

namespace {

bool detect_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const detail::Ops*> g_ops{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};

const detail::Ops* ops() {
  const detail::Ops* p = g_ops.load(std::memory_order_acquire);
  if (!p) {
    Backend b = detect_avx2() ? Backend::Avx2 : Backend::Scalar;
    p = (b == Backend::Avx2) ? &detail::avx2_ops : &detail::scalar_ops;
    g_backend.store(b, std::memory_order_relaxed);
    g_ops.store(p, std::memory_order_release);
  }
  return p;
}

}  // namespace

bool avx2_supported() { return detect_avx2(); }

Backend active_backend() {
  ops();
  return g_backend.load(std::memory_order_relaxed);
}

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !detect_avx2())
    throw std::runtime_error("kernels: AVX2 backend requested but not supported by this CPU");
  g_backend.store(b, std::memory_order_relaxed);
  g_ops.store(b == Backend::Avx2 ? &detail::avx2_ops : &detail::scalar_ops,
              std::memory_order_release);
}

void add(const double* a, const double* b, double* out, std::size_t n) { ops()->add(a, b, out, n); }
void sub(const double* a, const double* b, double* out, std::size_t n) { ops()->sub(a, b, out, n); }
void mul(const double* a, const double* b, double* out, std::size_t n) { ops()->mul(a, b, out, n); }
void scale(const double* a, double c, double* out, std::size_t n) { ops()->scale(a, c, out, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { ops()->axpy(alpha, x, y, n); }
double dot(const double* a, const double* b, std::size_t n) { return ops()->dot(a, b, n); }
double sum(const double* a, std::size_t n) { return ops()->sum(a, n); }
void relu(const double* a, double* out, std::size_t n) { ops()->relu(a, out, n); }
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  ops()->gemm(a, b, c, m, k, n);
}
void gemm_at(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  ops()->gemm_at(a, b, c, m, k, n);
}
void gemm_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  ops()->gemm_bt(a, b, c, m, k, n);
}

}  // namespace elp::kernels
