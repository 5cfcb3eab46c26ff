#pragma once

#include <cstdint>

// Dense row-major kernels behind the trainer and decoder. Two f32 backends:
// a scalar reference and an AVX2+FMA variant, selected once at runtime
// (SCRATCHBENCH_KERNELS=scalar|avx2 overrides CPU detection). f64 entry
// points are scalar only; that precision exists for gradient verification,
// not speed.
//
// Accumulation-order contract: for a fixed backend, every output element is
// reduced in ascending-k order with a single accumulator chain, independent
// of the number of rows in the call. A 1-row call therefore produces the
// same bits as the matching row of a many-row call; incremental decoding
// relies on this.

namespace scratchbench::kern {

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name(Backend b);
void force_backend(Backend b);  // test hook; also applies env override logic
bool cpu_supports_avx2();

// c [m x n] = a [m x k] * b [k x n]          (+= if accumulate)
void gemm_nn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
// c [m x n] = a [m x k] * b^T, b is [n x k]  (+= if accumulate)
void gemm_nt(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
// c [m x n] = a^T * b, a is [k x m], b is [k x n]  (+= if accumulate)
void gemm_tn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);

float dot(const float* a, const float* b, int n);
void axpy(float* y, float alpha, const float* x, int n);  // y += alpha * x

// One Adam step over a flat array; bc1/bc2 are the bias-correction factors
// 1-beta^t already evaluated by the caller.
void adam_step(float* p, const float* g, float* m, float* v, int n,
               float lr, float beta1, float beta2, float eps, float bc1, float bc2);

// f64: scalar only.
void gemm_nn(double* c, const double* a, const double* b, int m, int n, int k, bool accumulate);
void gemm_nt(double* c, const double* a, const double* b, int m, int n, int k, bool accumulate);
void gemm_tn(double* c, const double* a, const double* b, int m, int n, int k, bool accumulate);
double dot(const double* a, const double* b, int n);
void axpy(double* y, double alpha, const double* x, int n);
void adam_step(double* p, const double* g, double* m, double* v, int n,
               double lr, double beta1, double beta2, double eps, double bc1, double bc2);

// Reference implementations, directly callable by equivalence tests.
namespace scalar_ref {
void gemm_nn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
void gemm_nt(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
void gemm_tn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
float dot(const float* a, const float* b, int n);
void axpy(float* y, float alpha, const float* x, int n);
void adam_step(float* p, const float* g, float* m, float* v, int n,
               float lr, float beta1, float beta2, float eps, float bc1, float bc2);
}  // namespace scalar_ref

// AVX2+FMA implementations; defined in a TU compiled with -mavx2 -mfma.
// Callable only when cpu_supports_avx2() is true.
namespace avx2 {
void gemm_nn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
void gemm_nt(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
void gemm_tn(float* c, const float* a, const float* b, int m, int n, int k, bool accumulate);
float dot(const float* a, const float* b, int n);
void axpy(float* y, float alpha, const float* x, int n);
void adam_step(float* p, const float* g, float* m, float* v, int n,
               float lr, float beta1, float beta2, float eps, float bc1, float bc2);
}  // namespace avx2

}  // namespace scratchbench::kern
