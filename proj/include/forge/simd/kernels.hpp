#pragma once

#include <cstddef>

// Dense kernels behind the network layers. All matrices are row-major with
// explicit leading dimensions, and every kernel accumulates into C.
//
// gemm_nn and gemm_tn compute each C element as one fused-multiply-add chain
// over k in ascending order, in both the scalar and the AVX2 variant. Results
// are therefore bitwise identical across variants and independent of how rows
// are batched. gemm_nt reduces over contiguous k with lane-parallel partial
// sums in the AVX2 variant and agrees with the scalar variant to rounding.

namespace forge::simd {

namespace scalar {

template <class T>
void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);
template <class T>
void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);
template <class T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);
template <class T>
void adam_update(std::size_t n, T* param, const T* grad, T* m, T* v, T lr, T beta1, T beta2, T eps, T bias1,
                 T bias2);

}  // namespace scalar

namespace avx2 {

void gemm_nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc);
void gemm_tn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc);
void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc);
void adam_update(std::size_t n, float* param, const float* grad, float* m, float* v, float lr, float beta1,
                 float beta2, float eps, float bias1, float bias2);

}  // namespace avx2

/// C[m x n] += A[m x k] * B[k x n]
template <class T>
void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);

/// C[m x n] += A[k x m]^T * B[k x n]
template <class T>
void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);

/// C[m x n] += A[m x k] * B[n x k]^T
template <class T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);

/// One Adam step. bias1 = 1 - beta1^t and bias2 = 1 - beta2^t.
template <class T>
void adam_update(std::size_t n, T* param, const T* grad, T* m, T* v, T lr, T beta1, T beta2, T eps, T bias1,
                 T bias2);

}  // namespace forge::simd
