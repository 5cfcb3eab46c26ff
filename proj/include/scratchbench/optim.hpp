#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "scratchbench/kernels.hpp"
#include "scratchbench/params.hpp"

namespace scratchbench {

// Adam moments, parallel to a parameter list's registration order. t counts
// completed update steps and drives bias correction.
template <class T>
struct AdamState {
    std::vector<std::vector<T>> m, v;
    uint64_t t = 0;

    static AdamState like(const std::vector<ParamTensor<T>>& params) {
        AdamState st;
        st.m.reserve(params.size());
        st.v.reserve(params.size());
        for (const auto& p : params) {
            st.m.emplace_back(p.count(), T(0));
            st.v.emplace_back(p.count(), T(0));
        }
        return st;
    }
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One optimizer step over every parameter tensor, in registration order.
// Increments state.t, then applies bias-corrected Adam with the given lr.
template <class T>
void adam_update(std::vector<ParamTensor<T>>& params, AdamState<T>& state, const AdamConfig& cfg, T lr) {
    state.t += 1;
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(state.t)));
    const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(state.t)));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        kern::adam_step(p.w.data(), p.g.data(), state.m[i].data(), state.v[i].data(),
                        static_cast<int>(p.count()), lr, b1, b2, static_cast<T>(cfg.eps), bc1, bc2);
    }
}

// Linear warmup from zero over warmup_steps updates, constant afterwards.
// step is 1-based: the first update uses lr_at(sched, 1).
struct LrSchedule {
    double base_lr = 1e-4;
    int warmup_steps = 0;
};

inline double lr_at(const LrSchedule& sched, long step) {
    if (sched.warmup_steps <= 0 || step >= sched.warmup_steps) return sched.base_lr;
    return sched.base_lr * static_cast<double>(step) / sched.warmup_steps;
}

// Global L2 norm of all gradients, accumulated in double in registration order.
template <class T>
double global_grad_norm(const std::vector<ParamTensor<T>>& params) {
    double acc = 0.0;
    for (const auto& p : params) {
        for (const T g : p.g) acc += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(acc);
}

// Scales gradients so the global norm does not exceed max_norm; returns the
// pre-clip norm. max_norm <= 0 disables clipping.
template <class T>
double clip_grad_norm(std::vector<ParamTensor<T>>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (max_norm > 0.0 && norm > max_norm) {
        const T s = static_cast<T>(max_norm / norm);
        for (auto& p : params) {
            for (T& g : p.g) g *= s;
        }
    }
    return norm;
}

}  // namespace scratchbench
