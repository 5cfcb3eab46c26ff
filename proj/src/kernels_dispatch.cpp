#include "scratchbench/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace scratchbench::kern {

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend resolve_backend() {
    if (const char* env = std::getenv("SCRATCHBENCH_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (cpu_supports_avx2()) return Backend::avx2;
            std::fprintf(stderr, "warning: SCRATCHBENCH_KERNELS=avx2 but the CPU lacks AVX2+FMA; using scalar\n");
            return Backend::scalar;
        }
        std::fprintf(stderr, "warning: unknown SCRATCHBENCH_KERNELS value '%s'; using auto-detection\n", env);
    }
    return cpu_supports_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = resolve_backend();

}  // namespace

Backend active_backend() { return g_backend; }

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
    if (b == Backend::avx2 && !cpu_supports_avx2()) {
        std::fprintf(stderr, "warning: AVX2 backend requested but unsupported; keeping scalar\n");
        b = Backend::scalar;
    }
    g_backend = b;
}

void gemm_nn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    if (g_backend == Backend::avx2) {
        avx2::gemm_nn(c, a, b, m, n, k, accumulate);
    } else {
        scalar_ref::gemm_nn(c, a, b, m, n, k, accumulate);
    }
}

void gemm_nt(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    if (g_backend == Backend::avx2) {
        avx2::gemm_nt(c, a, b, m, n, k, accumulate);
    } else {
        scalar_ref::gemm_nt(c, a, b, m, n, k, accumulate);
    }
}

void gemm_tn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    if (g_backend == Backend::avx2) {
        avx2::gemm_tn(c, a, b, m, n, k, accumulate);
    } else {
        scalar_ref::gemm_tn(c, a, b, m, n, k, accumulate);
    }
}

float dot(const float* a, const float* b, int n) {
    return g_backend == Backend::avx2 ? avx2::dot(a, b, n) : scalar_ref::dot(a, b, n);
}

void axpy(float* y, float alpha, const float* x, int n) {
    if (g_backend == Backend::avx2) {
        avx2::axpy(y, alpha, x, n);
    } else {
        scalar_ref::axpy(y, alpha, x, n);
    }
}

void adam_step(float* p, const float* g, float* m, float* v, int n,
               float lr, float beta1, float beta2, float eps, float bc1, float bc2) {
    if (g_backend == Backend::avx2) {
        avx2::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
    } else {
        scalar_ref::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
    }
}

}  // namespace scratchbench::kern
