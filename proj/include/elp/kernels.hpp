#pragma once

#include <cstddef>

// Dense double-precision inner loops. Every kernel has a scalar reference
// implementation and an AVX2/FMA variant; the active backend is selected at
// runtime from CPUID and can be forced for equivalence testing.

namespace elp::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2_supported();
Backend active_backend();
void set_backend(Backend b);  // throws std::runtime_error if unsupported

void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double c, double* out, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void relu(const double* a, double* out, std::size_t n);

// c += a(MxK) * b(KxN), all row-major
void gemm(const double* a, const double* b, double* c,
          std::size_t m, std::size_t k, std::size_t n);
// c(KxN) += a(MxK)^T * b(MxN)
void gemm_at(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);
// c(MxK) += a(MxN) * b(KxN)^T
void gemm_bt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

namespace detail {
struct Ops {
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*scale)(const double*, double, double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*relu)(const double*, double*, std::size_t);
  void (*gemm)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
  void (*gemm_at)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
  void (*gemm_bt)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
};
extern const Ops scalar_ops;
extern const Ops avx2_ops;
}  // namespace detail

}  // namespace elp::kernels
