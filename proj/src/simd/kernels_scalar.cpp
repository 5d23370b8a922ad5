#include <cmath>

#include "forge/simd/kernels.hpp"

namespace forge::simd::scalar {

template <class T>
void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
    const T* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
      for (int j = 0; j < n; ++j) ci[j] = std::fma(av, bp[j], ci[j]);
    }
  }
}

template <class T>
void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<std::ptrdiff_t>(p) * lda + i];
      const T* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
      for (int j = 0; j < n; ++j) ci[j] = std::fma(av, bp[j], ci[j]);
    }
  }
}

template <class T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const T* bj = b + static_cast<std::ptrdiff_t>(j) * ldb;
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc = std::fma(ai[p], bj[p], acc);
      c[static_cast<std::ptrdiff_t>(i) * ldc + j] += acc;
    }
  }
}

template <class T>
void adam_update(std::size_t n, T* param, const T* grad, T* m, T* v, T lr, T beta1, T beta2, T eps, T bias1,
                 T bias2) {
  const T one_minus_b1 = T(1) - beta1;
  const T one_minus_b2 = T(1) - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const T g = grad[i];
    m[i] = beta1 * m[i] + one_minus_b1 * g;
    v[i] = beta2 * v[i] + one_minus_b2 * (g * g);
    const T m_hat = m[i] / bias1;
    const T v_hat = v[i] / bias2;
    param[i] = param[i] - (lr * m_hat) / (std::sqrt(v_hat) + eps);
  }
}

#define FORGE_INSTANTIATE(T)                                                                         \
  template void gemm_nn<T>(int, int, int, const T*, int, const T*, int, T*, int);                    \
  template void gemm_tn<T>(int, int, int, const T*, int, const T*, int, T*, int);                    \
  template void gemm_nt<T>(int, int, int, const T*, int, const T*, int, T*, int);                    \
  template void adam_update<T>(std::size_t, T*, const T*, T*, T*, T, T, T, T, T, T);

FORGE_INSTANTIATE(float)
FORGE_INSTANTIATE(double)
#undef FORGE_INSTANTIATE

}  // namespace forge::simd::scalar
