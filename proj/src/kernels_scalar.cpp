#include "scratchbench/kernels.hpp"

#include <cmath>

namespace scratchbench::kern {

// Shared templated reference bodies. Plain multiply-add, ascending k.

namespace {

template <class T>
void gemm_nn_ref(T* c, const T* a, const T* b, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<size_t>(i) * n;
        const T* arow = a + static_cast<size_t>(i) * k;
        if (!accumulate) {
            for (int j = 0; j < n; ++j) crow[j] = T(0);
        }
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class T>
void gemm_nt_ref(T* c, const T* a, const T* b, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<size_t>(i) * k;
        T* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<size_t>(j) * k;
            T acc = T(0);
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = accumulate ? crow[j] + acc : acc;
        }
    }
}

template <class T>
void gemm_tn_ref(T* c, const T* a, const T* b, int m, int n, int k, bool accumulate) {
    if (!accumulate) {
        for (size_t i = 0; i < static_cast<size_t>(m) * n; ++i) c[i] = T(0);
    }
    for (int p = 0; p < k; ++p) {
        const T* arow = a + static_cast<size_t>(p) * m;
        const T* brow = b + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class T>
T dot_ref(const T* a, const T* b, int n) {
    T acc = T(0);
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <class T>
void axpy_ref(T* y, T alpha, const T* x, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void adam_step_ref(T* p, const T* g, T* m, T* v, int n,
                   T lr, T beta1, T beta2, T eps, T bc1, T bc2) {
    for (int i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

namespace scalar_ref {

void gemm_nn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    gemm_nn_ref(c, a, b, m, n, k, accumulate);
}
void gemm_nt(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    gemm_nt_ref(c, a, b, m, n, k, accumulate);
}
void gemm_tn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate) {
    gemm_tn_ref(c, a, b, m, n, k, accumulate);
}
float dot(const float* a, const float* b, int n) { return dot_ref(a, b, n); }
void axpy(float* y, float alpha, const float* x, int n) { axpy_ref(y, alpha, x, n); }
void adam_step(float* p, const float* g, float* m, float* v, int n,
               float lr, float beta1, float beta2, float eps, float bc1, float bc2) {
    adam_step_ref(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace scalar_ref

void gemm_nn(double* c, const double* a, const double* b, int m, int n, int k, bool accumulate) {
    gemm_nn_ref(c, a, b, m, n, k, accumulate);
}
void gemm_nt(double* c, const double* a, const double* b, int m, int n, int k, bool accumulate) {
    gemm_nt_ref(c, a, b, m, n, k, accumulate);
}
void gemm_tn(double* c, const double* a, const double* b, int m, int n, int k, bool accumulate) {
    gemm_tn_ref(c, a, b, m, n, k, accumulate);
}
double dot(const double* a, const double* b, int n) { return dot_ref(a, b, n); }
void axpy(double* y, double alpha, const double* x, int n) { axpy_ref(y, alpha, x, n); }
void adam_step(double* p, const double* g, double* m, double* v, int n,
               double lr, double beta1, double beta2, double eps, double bc1, double bc2) {
    adam_step_ref(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace scratchbench::kern
