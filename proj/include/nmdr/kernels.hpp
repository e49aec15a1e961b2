#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace nmdr::kern {

// Branch-free expf (Cephes-style polynomial, ~2 ulp). The fma sequence
// matches the vectorized kernels in kernels.cpp bit for bit.
inline float fast_expf(float x) {
    x = x < -87.f ? -87.f : (x > 88.f ? 88.f : x);
    const float n = std::nearbyintf(x * 1.44269504088896341f);
    float r = std::fma(n, -0.693359375f, x);
    r = std::fma(n, 2.12194440e-4f, r);
    float p = 1.9875691500e-4f;
    p = std::fma(p, r, 1.3981999507e-3f);
    p = std::fma(p, r, 8.3334519073e-3f);
    p = std::fma(p, r, 4.1665795894e-2f);
    p = std::fma(p, r, 1.6666665459e-1f);
    p = std::fma(p, r, 5.0000001201e-1f);
    const float e = std::fma(p * r, r, r + 1.0f);
    const float s = std::bit_cast<float>((static_cast<int32_t>(n) + 127) << 23);
    return e * s;
}

inline float fast_sigmoid(float x) {
    const float e = fast_expf(-std::fabs(x));
    const float s = e / (1.f + e);
    return x >= 0.f ? 1.f - s : s;
}

// Vectorized elementwise maps (AVX2 + scalar fma tail, identical rounding).
void ew_exp(float* y, const float* x, std::size_t n);
void ew_elu(float* y, const float* x, std::size_t n);
void ew_sigmoid(float* y, const float* x, std::size_t n);

// Row-major f32 matrix kernels. Written as rank-1 update / dot-product loops
// with contiguous inner dimensions so the compiler can vectorize them.

// C[M,N] (+)= A[M,K] * B[K,N]
void gemm_nn(float* C, const float* A, const float* B, int M, int K, int N, bool accumulate);

// C[M,N] (+)= A[M,K] * B[N,K]^T
void gemm_nt(float* C, const float* A, const float* B, int M, int K, int N, bool accumulate);

// C[K,N] (+)= A[M,K]^T * B[M,N]
void gemm_tn(float* C, const float* A, const float* B, int M, int K, int N, bool accumulate);

// out[N] (+)= sum over rows of X[M,N]
void col_sum(float* out, const float* X, int M, int N, bool accumulate);

// y += a * x  (length n)
void axpy(float* y, float a, const float* x, std::size_t n);

}  // namespace nmdr::kern
