#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace scratchbench {

// splitmix64: seeding / hashing primitive.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic, platform-independent PRNG (xoshiro256++). std:: distributions
// are implementation-defined, so every sampling helper is hand-rolled here;
// the bitwise-reproducibility contract depends on it.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl_(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl_(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform in [0, n). Lemire's multiply-shift with rejection.
    uint64_t below(uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<uint64_t>(m);
        if (lo < n) {
            const uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // Uniform integer in [lo, hi], inclusive.
    int range_int(int lo, int hi) { return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1))); }

    // Standard normal via Box-Muller (no cached spare: one draw, two uniforms).
    double gaussian() {
        const double u1 = 1.0 - next_real01();  // (0, 1], keeps log finite
        const double u2 = next_real01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // n distinct indices from [0, pool_size), order random (partial Fisher-Yates).
    std::vector<int> sample_distinct(int pool_size, int n) {
        std::vector<int> idx(static_cast<size_t>(pool_size));
        for (int i = 0; i < pool_size; ++i) idx[static_cast<size_t>(i)] = i;
        for (int i = 0; i < n; ++i) {
            const int j = i + static_cast<int>(below(static_cast<uint64_t>(pool_size - i)));
            std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
        }
        idx.resize(static_cast<size_t>(n));
        return idx;
    }

private:
    static uint64_t rotl_(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4]{};
};

// Stable seed derivation. Distinct namespaces give statistically independent
// streams; used to keep train/eval/init sampling domains separated.
inline uint64_t derive_seed(uint64_t master, std::string_view ns, uint64_t a = 0, uint64_t b = 0) {
    uint64_t h = master ^ 0x6a09e667f3bcc909ull;
    auto mix = [&h](uint64_t v) {
        h ^= v;
        uint64_t s = h;
        h = splitmix64(s);
    };
    for (const char c : ns) mix(static_cast<unsigned char>(c));
    mix(a);
    mix(b);
    return h;
}

}  // namespace scratchbench
