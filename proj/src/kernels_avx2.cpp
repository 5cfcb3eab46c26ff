#include "scratchbench/kernels.hpp"

#include <cmath>
#include <immintrin.h>

// AVX2+FMA backend. This TU is compiled with -mavx2 -mfma; nothing else in
// the build is. Scalar tails use std::fmaf so the arithmetic per element is
// the same fused chain as its vector-lane counterpart, which keeps results
// independent of where the column falls relative to the vector blocks.

namespace scratchbench::kern::avx2 {

namespace {

float hsum8(__m256 v) {
    const __m128 lo = _mm256_castps256_ps128(v);
    const __m128 hi = _mm256_extractf128_ps(v, 1);
    __m128 s = _mm_add_ps(lo, hi);
    s = _mm_add_ps(s, _mm_movehl_ps(s, s));
    s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 1));
    return _mm_cvtss_f32(s);
}

}  // namespace

void gemm_nn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    const int n16 = n & ~15;
    const int n8 = n & ~7;
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<size_t>(i) * k;
        float* crow = c + static_cast<size_t>(i) * n;
        int j = 0;
        for (; j < n16; j += 16) {
            __m256 acc0 = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
            __m256 acc1 = accumulate ? _mm256_loadu_ps(crow + j + 8) : _mm256_setzero_ps();
            for (int p = 0; p < k; ++p) {
                const __m256 av = _mm256_set1_ps(arow[p]);
                const float* brow = b + static_cast<size_t>(p) * n + j;
                acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), acc0);
                acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), acc1);
            }
            _mm256_storeu_ps(crow + j, acc0);
            _mm256_storeu_ps(crow + j + 8, acc1);
        }
        for (; j < n8; j += 8) {
            __m256 acc = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
            for (int p = 0; p < k; ++p) {
                const __m256 av = _mm256_set1_ps(arow[p]);
                acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + static_cast<size_t>(p) * n + j), acc);
            }
            _mm256_storeu_ps(crow + j, acc);
        }
        for (; j < n; ++j) {
            float acc = accumulate ? crow[j] : 0.0f;
            for (int p = 0; p < k; ++p) acc = std::fmaf(arow[p], b[static_cast<size_t>(p) * n + j], acc);
            crow[j] = acc;
        }
    }
}

float dot(const float* a, const float* b, int n) {
    const int n8 = n & ~7;
    __m256 acc = _mm256_setzero_ps();
    for (int i = 0; i < n8; i += 8) {
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    }
    float s = hsum8(acc);
    for (int i = n8; i < n; ++i) s = std::fmaf(a[i], b[i], s);
    return s;
}

void gemm_nt(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<size_t>(i) * k;
        float* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float d = dot(arow, b + static_cast<size_t>(j) * k, k);
            crow[j] = accumulate ? crow[j] + d : d;
        }
    }
}

void gemm_tn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    const int n8 = n & ~7;
    if (!accumulate) {
        for (size_t i = 0; i < static_cast<size_t>(m) * n; ++i) c[i] = 0.0f;
    }
    for (int p = 0; p < k; ++p) {
        const float* arow = a + static_cast<size_t>(p) * m;
        const float* brow = b + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const __m256 av = _mm256_set1_ps(arow[i]);
            float* crow = c + static_cast<size_t>(i) * n;
            int j = 0;
            for (; j < n8; j += 8) {
                const __m256 acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), _mm256_loadu_ps(crow + j));
                _mm256_storeu_ps(crow + j, acc);
            }
            for (; j < n; ++j) crow[j] = std::fmaf(arow[i], brow[j], crow[j]);
        }
    }
}

void axpy(float* y, float alpha, const float* x, int n) {
    const int n8 = n & ~7;
    const __m256 va = _mm256_set1_ps(alpha);
    for (int i = 0; i < n8; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (int i = n8; i < n; ++i) y[i] = std::fmaf(alpha, x[i], y[i]);
}

void adam_step(float* p, const float* g, float* m, float* v, int n,
               float lr, float beta1, float beta2, float eps, float bc1, float bc2) {
    const int n8 = n & ~7;
    const __m256 vb1 = _mm256_set1_ps(beta1);
    const __m256 vb2 = _mm256_set1_ps(beta2);
    const __m256 v1mb1 = _mm256_set1_ps(1.0f - beta1);
    const __m256 v1mb2 = _mm256_set1_ps(1.0f - beta2);
    const __m256 vlr = _mm256_set1_ps(lr);
    const __m256 veps = _mm256_set1_ps(eps);
    const __m256 vibc1 = _mm256_set1_ps(bc1);
    const __m256 vibc2 = _mm256_set1_ps(bc2);
    for (int i = 0; i < n8; i += 8) {
        const __m256 vg = _mm256_loadu_ps(g + i);
        const __m256 vm = _mm256_fmadd_ps(vb1, _mm256_loadu_ps(m + i), _mm256_mul_ps(v1mb1, vg));
        const __m256 vv = _mm256_fmadd_ps(vb2, _mm256_loadu_ps(v + i), _mm256_mul_ps(v1mb2, _mm256_mul_ps(vg, vg)));
        _mm256_storeu_ps(m + i, vm);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mhat = _mm256_div_ps(vm, vibc1);
        const __m256 vhat = _mm256_div_ps(vv, vibc2);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
        const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), denom);
        _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
    }
    for (int i = n8; i < n; ++i) {
        const float gi = g[i];
        m[i] = std::fmaf(beta1, m[i], (1.0f - beta1) * gi);
        v[i] = std::fmaf(beta2, v[i], (1.0f - beta2) * (gi * gi));
        const float mhat = m[i] / bc1;
        const float vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace scratchbench::kern::avx2
