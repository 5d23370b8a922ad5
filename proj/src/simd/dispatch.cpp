// Runtime selection between the scalar reference kernels and the AVX2 variants.
// Double precision always takes the scalar path.

#include "forge/simd/cpu.hpp"
#include "forge/simd/kernels.hpp"

namespace forge::simd {

namespace {
bool use_avx2() { return active_isa() == Isa::kAvx2; }
}  // namespace

template <>
void gemm_nn<float>(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  if (m <= 0 || n <= 0 || k <= 0) return;
  if (use_avx2()) return avx2::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
  scalar::gemm_nn<float>(m, n, k, a, lda, b, ldb, c, ldc);
}

template <>
void gemm_tn<float>(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  if (m <= 0 || n <= 0 || k <= 0) return;
  if (use_avx2()) return avx2::gemm_tn(m, n, k, a, lda, b, ldb, c, ldc);
  scalar::gemm_tn<float>(m, n, k, a, lda, b, ldb, c, ldc);
}

template <>
void gemm_nt<float>(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  if (m <= 0 || n <= 0 || k <= 0) return;
  if (use_avx2()) return avx2::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
  scalar::gemm_nt<float>(m, n, k, a, lda, b, ldb, c, ldc);
}

template <>
void adam_update<float>(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float b1, float b2,
                        float eps, float bias1, float bias2) {
  if (use_avx2()) return avx2::adam_update(n, p, g, m, v, lr, b1, b2, eps, bias1, bias2);
  scalar::adam_update<float>(n, p, g, m, v, lr, b1, b2, eps, bias1, bias2);
}

template <>
void gemm_nn<double>(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
  scalar::gemm_nn<double>(m, n, k, a, lda, b, ldb, c, ldc);
}

template <>
void gemm_tn<double>(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
  scalar::gemm_tn<double>(m, n, k, a, lda, b, ldb, c, ldc);
}

template <>
void gemm_nt<double>(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
  scalar::gemm_nt<double>(m, n, k, a, lda, b, ldb, c, ldc);
}

template <>
void adam_update<double>(std::size_t n, double* p, const double* g, double* m, double* v, double lr, double b1,
                         double b2, double eps, double bias1, double bias2) {
  scalar::adam_update<double>(n, p, g, m, v, lr, b1, b2, eps, bias1, bias2);
}

}  // namespace forge::simd
