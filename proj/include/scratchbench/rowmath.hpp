#pragma once

#include <cmath>

// Row-wise numeric helpers shared by the autodiff forward ops and the
// incremental decoder. Both paths MUST route per-row math through these
// functions: the bitwise agreement between batched training forwards and
// KV-cached decoding depends on executing the exact same arithmetic.

namespace scratchbench::rowm {

template <class T>
inline void layer_norm_row(T* out, const T* x, const T* gamma, const T* beta, int d, T eps,
                           T* mean_out = nullptr, T* rstd_out = nullptr) {
    T mean = T(0);
    for (int i = 0; i < d; ++i) mean += x[i];
    mean /= static_cast<T>(d);
    T var = T(0);
    for (int i = 0; i < d; ++i) {
        const T c = x[i] - mean;
        var += c * c;
    }
    var /= static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + eps);
    for (int i = 0; i < d; ++i) out[i] = (x[i] - mean) * rstd * gamma[i] + beta[i];
    if (mean_out) *mean_out = mean;
    if (rstd_out) *rstd_out = rstd;
}

template <class T>
inline void softmax_row(T* s, int n) {
    T mx = s[0];
    for (int i = 1; i < n; ++i) mx = s[i] > mx ? s[i] : mx;
    T sum = T(0);
    for (int i = 0; i < n; ++i) {
        s[i] = std::exp(s[i] - mx);
        sum += s[i];
    }
    for (int i = 0; i < n; ++i) s[i] /= sum;
}

// exact (erf-based) GELU
template <class T>
inline T gelu_one(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <class T>
inline T gelu_deriv_one(T x) {
    const T phi = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
    const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
    return phi + x * pdf;
}

// log-sum-exp of a row; also writes the row max for reuse.
template <class T>
inline T log_sum_exp_row(const T* s, int n, T* max_out = nullptr) {
    T mx = s[0];
    for (int i = 1; i < n; ++i) mx = s[i] > mx ? s[i] : mx;
    T sum = T(0);
    for (int i = 0; i < n; ++i) sum += std::exp(s[i] - mx);
    if (max_out) *max_out = mx;
    return mx + std::log(sum);
}

// argmax with lowest-index tie break; the greedy decoding rule.
template <class T>
inline int argmax_row(const T* s, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i) {
        if (s[i] > s[best]) best = i;
    }
    return best;
}

// token embedding + optional learned position embedding for one row
template <class T>
inline void embed_row(T* out, const T* tok_table, const T* pos_table, int token, int pos, int d) {
    const T* e = tok_table + static_cast<size_t>(token) * d;
    if (pos_table) {
        const T* p = pos_table + static_cast<size_t>(pos) * d;
        for (int j = 0; j < d; ++j) out[j] = e[j] + p[j];
    } else {
        for (int j = 0; j < d; ++j) out[j] = e[j];
    }
}

}  // namespace scratchbench::rowm
