// Compiled with -mavx2 -mfma; only reached when the CPU reports both.

#include <immintrin.h>

#include <cmath>

#include "forge/simd/kernels.hpp"

namespace forge::simd::avx2 {

namespace {

// MR x 24 tile; a(r, p) = a[r * a_rs + p * a_ps]
template <int MR>
inline void tile24(int k, const float* a, std::ptrdiff_t a_rs, std::ptrdiff_t a_ps, const float* b, int ldb,
                   float* c, int ldc) {
  __m256 acc[MR][3];
  for (int r = 0; r < MR; ++r) {
    for (int q = 0; q < 3; ++q) acc[r][q] = _mm256_loadu_ps(c + r * ldc + 8 * q);
  }
  for (int p = 0; p < k; ++p) {
    const float* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    const __m256 b2 = _mm256_loadu_ps(bp + 16);
    for (int r = 0; r < MR; ++r) {
      const __m256 av = _mm256_broadcast_ss(a + r * a_rs + p * a_ps);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
      acc[r][2] = _mm256_fmadd_ps(av, b2, acc[r][2]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    for (int q = 0; q < 3; ++q) _mm256_storeu_ps(c + r * ldc + 8 * q, acc[r][q]);
  }
}

template <int MR>
inline void tile8(int k, const float* a, std::ptrdiff_t a_rs, std::ptrdiff_t a_ps, const float* b, int ldb, float* c,
                  int ldc) {
  __m256 acc[MR];
  for (int r = 0; r < MR; ++r) acc[r] = _mm256_loadu_ps(c + r * ldc);
  for (int p = 0; p < k; ++p) {
    const __m256 b0 = _mm256_loadu_ps(b + static_cast<std::ptrdiff_t>(p) * ldb);
    for (int r = 0; r < MR; ++r) {
      acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(a + r * a_rs + p * a_ps), b0, acc[r]);
    }
  }
  for (int r = 0; r < MR; ++r) _mm256_storeu_ps(c + r * ldc, acc[r]);
}

template <int MR>
inline void tile_cols(int k, int cols, const float* a, std::ptrdiff_t a_rs, std::ptrdiff_t a_ps, const float* b,
                      int ldb, float* c, int ldc) {
  for (int r = 0; r < MR; ++r) {
    for (int j = 0; j < cols; ++j) {
      float acc = c[r * ldc + j];
      for (int p = 0; p < k; ++p) acc = std::fma(a[r * a_rs + p * a_ps], b[static_cast<std::ptrdiff_t>(p) * ldb + j], acc);
      c[r * ldc + j] = acc;
    }
  }
}

template <int MR>
void row_block(int n, int k, const float* a, std::ptrdiff_t a_rs, std::ptrdiff_t a_ps, const float* b, int ldb,
               float* c, int ldc) {
  int j = 0;
  for (; j + 24 <= n; j += 24) tile24<MR>(k, a, a_rs, a_ps, b + j, ldb, c + j, ldc);
  for (; j + 8 <= n; j += 8) tile8<MR>(k, a, a_rs, a_ps, b + j, ldb, c + j, ldc);
  if (j < n) tile_cols<MR>(k, n - j, a, a_rs, a_ps, b + j, ldb, c + j, ldc);
}

// Shared driver for the nn and tn layouts.
void gemm_strided(int m, int n, int k, const float* a, std::ptrdiff_t a_row, std::ptrdiff_t a_col, const float* b,
                  int ldb, float* c, int ldc) {
  int i = 0;
  for (; i + 4 <= m; i += 4) row_block<4>(n, k, a + i * a_row, a_row, a_col, b, ldb, c + static_cast<std::ptrdiff_t>(i) * ldc, ldc);
  const float* ai = a + i * a_row;
  float* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
  switch (m - i) {
    case 3:
      row_block<3>(n, k, ai, a_row, a_col, b, ldb, ci, ldc);
      break;
    case 2:
      row_block<2>(n, k, ai, a_row, a_col, b, ldb, ci, ldc);
      break;
    case 1:
      row_block<1>(n, k, ai, a_row, a_col, b, ldb, ci, ldc);
      break;
    default:
      break;
  }
}

inline float hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
  return _mm_cvtss_f32(s);
}

}  // namespace

void gemm_nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  gemm_strided(m, n, k, a, lda, 1, b, ldb, c, ldc);
}

void gemm_tn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  gemm_strided(m, n, k, a, 1, lda, b, ldb, c, ldc);
}

void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  const int k8 = k - k % 8;
  for (int i = 0; i < m; ++i) {
    const float* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const float* b0 = b + static_cast<std::ptrdiff_t>(j) * ldb;
      const float* b1 = b0 + ldb;
      const float* b2 = b1 + ldb;
      const float* b3 = b2 + ldb;
      __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps(), s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8) {
        const __m256 av = _mm256_loadu_ps(ai + p);
        s0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), s0);
        s1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), s1);
        s2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + p), s2);
        s3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + p), s3);
      }
      float r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (int p = k8; p < k; ++p) {
        r0 = std::fma(ai[p], b0[p], r0);
        r1 = std::fma(ai[p], b1[p], r1);
        r2 = std::fma(ai[p], b2[p], r2);
        r3 = std::fma(ai[p], b3[p], r3);
      }
      float* ci = c + static_cast<std::ptrdiff_t>(i) * ldc + j;
      ci[0] += r0;
      ci[1] += r1;
      ci[2] += r2;
      ci[3] += r3;
    }
    for (; j < n; ++j) {
      const float* bj = b + static_cast<std::ptrdiff_t>(j) * ldb;
      __m256 s = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8) s = _mm256_fmadd_ps(_mm256_loadu_ps(ai + p), _mm256_loadu_ps(bj + p), s);
      float r = hsum(s);
      for (int p = k8; p < k; ++p) r = std::fma(ai[p], bj[p], r);
      c[static_cast<std::ptrdiff_t>(i) * ldc + j] += r;
    }
  }
}

void adam_update(std::size_t n, float* param, const float* grad, float* m, float* v, float lr, float beta1,
                 float beta2, float eps, float bias1, float bias2) {
  const __m256 vb1 = _mm256_set1_ps(beta1), vb2 = _mm256_set1_ps(beta2);
  const __m256 vc1 = _mm256_set1_ps(1.0f - beta1), vc2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 vbias1 = _mm256_set1_ps(bias1), vbias2 = _mm256_set1_ps(bias2);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 mi = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vc1, g));
    const __m256 vi =
        _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)), _mm256_mul_ps(vc2, _mm256_mul_ps(g, g)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 m_hat = _mm256_div_ps(mi, vbias1);
    const __m256 v_hat = _mm256_div_ps(vi, vbias2);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, m_hat), _mm256_add_ps(_mm256_sqrt_ps(v_hat), veps));
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), step));
  }
  if (i < n) scalar::adam_update<float>(n - i, param + i, grad + i, m + i, v + i, lr, beta1, beta2, eps, bias1, bias2);
}

}  // namespace forge::simd::avx2
