#include "nmdr/kernels.hpp"

#include <immintrin.h>

#include <cstring>

namespace nmdr::kern {

namespace {

inline __m256 exp256(__m256 x) {
    x = _mm256_min_ps(_mm256_max_ps(x, _mm256_set1_ps(-87.f)), _mm256_set1_ps(88.f));
    const __m256 n = _mm256_round_ps(_mm256_mul_ps(x, _mm256_set1_ps(1.44269504088896341f)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256 r = _mm256_fmadd_ps(n, _mm256_set1_ps(-0.693359375f), x);
    r = _mm256_fmadd_ps(n, _mm256_set1_ps(2.12194440e-4f), r);
    __m256 p = _mm256_set1_ps(1.9875691500e-4f);
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.3981999507e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(8.3334519073e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(4.1665795894e-2f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.6666665459e-1f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(5.0000001201e-1f));
    const __m256 e = _mm256_fmadd_ps(_mm256_mul_ps(p, r), r,
                                     _mm256_add_ps(r, _mm256_set1_ps(1.0f)));
    const __m256i ni = _mm256_cvtps_epi32(n);
    const __m256 s = _mm256_castsi256_ps(
        _mm256_slli_epi32(_mm256_add_epi32(ni, _mm256_set1_epi32(127)), 23));
    return _mm256_mul_ps(e, s);
}

}  // namespace

void ew_exp(float* y, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, exp256(_mm256_loadu_ps(x + i)));
    for (; i < n; ++i) y[i] = fast_expf(x[i]);
}

void ew_elu(float* y, const float* x, std::size_t n) {
    const __m256 one = _mm256_set1_ps(1.f);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 neg = _mm256_sub_ps(exp256(v), one);
        const __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(y + i, _mm256_blendv_ps(neg, v, mask));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.f ? x[i] : fast_expf(x[i]) - 1.f;
}

void ew_sigmoid(float* y, const float* x, std::size_t n) {
    const __m256 one = _mm256_set1_ps(1.f);
    const __m256 zero = _mm256_setzero_ps();
    const __m256 absmask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7FFFFFFF));
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 e = exp256(_mm256_sub_ps(zero, _mm256_and_ps(v, absmask)));
        const __m256 s = _mm256_div_ps(e, _mm256_add_ps(one, e));
        const __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GE_OQ);
        _mm256_storeu_ps(y + i, _mm256_blendv_ps(s, _mm256_sub_ps(one, s), mask));
    }
    for (; i < n; ++i) y[i] = fast_sigmoid(x[i]);
}

void gemm_nn(float* C, const float* A, const float* B, int M, int K, int N, bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(float) * static_cast<size_t>(M) * N);
    for (int m = 0; m < M; ++m) {
        const float* __restrict__ a_row = A + static_cast<size_t>(m) * K;
        float* __restrict__ c_row = C + static_cast<size_t>(m) * N;
        int k = 0;
        for (; k + 4 <= K; k += 4) {
            const float a0 = a_row[k], a1 = a_row[k + 1], a2 = a_row[k + 2], a3 = a_row[k + 3];
            const float* __restrict__ b0 = B + static_cast<size_t>(k) * N;
            const float* __restrict__ b1 = b0 + N;
            const float* __restrict__ b2 = b1 + N;
            const float* __restrict__ b3 = b2 + N;
            for (int n = 0; n < N; ++n)
                c_row[n] += a0 * b0[n] + a1 * b1[n] + a2 * b2[n] + a3 * b3[n];
        }
        for (; k < K; ++k) {
            const float a = a_row[k];
            const float* __restrict__ b_row = B + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c_row[n] += a * b_row[n];
        }
    }
}

void gemm_nt(float* C, const float* A, const float* B, int M, int K, int N, bool accumulate) {
    for (int m = 0; m < M; ++m) {
        const float* __restrict__ a_row = A + static_cast<size_t>(m) * K;
        float* __restrict__ c_row = C + static_cast<size_t>(m) * N;
        for (int n = 0; n < N; ++n) {
            const float* __restrict__ b_row = B + static_cast<size_t>(n) * K;
            // Four explicit accumulators so the reduction can vectorize
            // without relying on fp reassociation flags.
            float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f;
            int k = 0;
            for (; k + 4 <= K; k += 4) {
                s0 += a_row[k] * b_row[k];
                s1 += a_row[k + 1] * b_row[k + 1];
                s2 += a_row[k + 2] * b_row[k + 2];
                s3 += a_row[k + 3] * b_row[k + 3];
            }
            float s = (s0 + s1) + (s2 + s3);
            for (; k < K; ++k) s += a_row[k] * b_row[k];
            if (accumulate)
                c_row[n] += s;
            else
                c_row[n] = s;
        }
    }
}

void gemm_tn(float* C, const float* A, const float* B, int M, int K, int N, bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(float) * static_cast<size_t>(K) * N);
    int m = 0;
    for (; m + 4 <= M; m += 4) {
        const float* __restrict__ a0 = A + static_cast<size_t>(m) * K;
        const float* __restrict__ a1 = a0 + K;
        const float* __restrict__ a2 = a1 + K;
        const float* __restrict__ a3 = a2 + K;
        const float* __restrict__ b0 = B + static_cast<size_t>(m) * N;
        const float* __restrict__ b1 = b0 + N;
        const float* __restrict__ b2 = b1 + N;
        const float* __restrict__ b3 = b2 + N;
        for (int k = 0; k < K; ++k) {
            const float x0 = a0[k], x1 = a1[k], x2 = a2[k], x3 = a3[k];
            float* __restrict__ c_row = C + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n)
                c_row[n] += x0 * b0[n] + x1 * b1[n] + x2 * b2[n] + x3 * b3[n];
        }
    }
    for (; m < M; ++m) {
        const float* __restrict__ a_row = A + static_cast<size_t>(m) * K;
        const float* __restrict__ b_row = B + static_cast<size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const float a = a_row[k];
            float* __restrict__ c_row = C + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c_row[n] += a * b_row[n];
        }
    }
}

void col_sum(float* out, const float* X, int M, int N, bool accumulate) {
    if (!accumulate) std::memset(out, 0, sizeof(float) * static_cast<size_t>(N));
    for (int m = 0; m < M; ++m) {
        const float* __restrict__ row = X + static_cast<size_t>(m) * N;
        for (int n = 0; n < N; ++n) out[n] += row[n];
    }
}

void axpy(float* y, float a, const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace nmdr::kern
