#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scratchbench {

// How the model sees token order. learned = trained absolute embeddings,
// rotary = position-dependent rotation of q/k, alibi = linear score bias,
// none = order information only through the causal mask.
enum class PosScheme { learned, rotary, alibi, none };

inline const char* pos_scheme_name(PosScheme s) {
    switch (s) {
        case PosScheme::learned: return "learned";
        case PosScheme::rotary: return "rotary";
        case PosScheme::alibi: return "alibi";
        case PosScheme::none: return "none";
    }
    return "?";
}

inline PosScheme parse_pos_scheme(std::string_view s) {
    if (s == "learned") return PosScheme::learned;
    if (s == "rotary") return PosScheme::rotary;
    if (s == "alibi") return PosScheme::alibi;
    if (s == "none") return PosScheme::none;
    throw std::invalid_argument("unknown positional scheme: " + std::string(s));
}

// Head h (0-based) of H gets slope 2^(-8(h+1)/H): a geometric sequence
// ending at 2^-8, steeper heads attend more locally.
inline std::vector<double> linear_bias_slopes(int n_heads) {
    std::vector<double> slopes(static_cast<size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        slopes[static_cast<size_t>(h)] = std::pow(2.0, -8.0 * (h + 1) / n_heads);
    }
    return slopes;
}

// Distance penalty added to a raw attention score: zero at the query itself,
// decreasing linearly with key distance.
template <class T>
inline T alibi_bias(T slope, int query_pos, int key_pos) {
    return slope * static_cast<T>(key_pos - query_pos);
}

// In-place rotary rotation of one head-slice. Pairs are (x[i], x[i+d/2]),
// pair i rotated by pos * theta^(-2i/d). Angles evaluated in double so both
// float and double pipelines share the same trigonometry.
template <class T>
inline void rotary_apply(T* x, int d_head, int pos, double theta) {
    const int half = d_head / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(theta, -2.0 * i / d_head);
        const double angle = static_cast<double>(pos) * freq;
        const T c = static_cast<T>(std::cos(angle));
        const T s = static_cast<T>(std::sin(angle));
        const T x0 = x[i];
        const T x1 = x[i + half];
        x[i] = x0 * c - x1 * s;
        x[i + half] = x0 * s + x1 * c;
    }
}

// Inverse rotation (transpose); used when pulling gradients back through.
template <class T>
inline void rotary_unapply(T* x, int d_head, int pos, double theta) {
    const int half = d_head / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(theta, -2.0 * i / d_head);
        const double angle = static_cast<double>(pos) * freq;
        const T c = static_cast<T>(std::cos(angle));
        const T s = static_cast<T>(std::sin(angle));
        const T x0 = x[i];
        const T x1 = x[i + half];
        x[i] = x0 * c + x1 * s;
        x[i + half] = -x0 * s + x1 * c;
    }
}

}  // namespace scratchbench
