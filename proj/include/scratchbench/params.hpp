#pragma once

#include <string>
#include <vector>

namespace scratchbench {

// One named weight matrix with its gradient accumulator. Stores keep these
// in a fixed registration order; that order is the canonical traversal for
// checkpoints and optimizer state.
template <class T>
struct ParamTensor {
    std::string name;
    int rows = 0, cols = 0;
    std::vector<T> w, g;

    ParamTensor() = default;
    ParamTensor(std::string n, int r, int c)
        : name(std::move(n)), rows(r), cols(c),
          w(static_cast<size_t>(r) * c, T(0)), g(static_cast<size_t>(r) * c, T(0)) {}
    size_t count() const { return w.size(); }
};

template <class T>
inline void zero_grads(std::vector<ParamTensor<T>>& params) {
    for (auto& p : params) std::fill(p.g.begin(), p.g.end(), T(0));
}

template <class T>
inline size_t param_count(const std::vector<ParamTensor<T>>& params) {
    size_t n = 0;
    for (const auto& p : params) n += p.count();
    return n;
}

}  // namespace scratchbench
