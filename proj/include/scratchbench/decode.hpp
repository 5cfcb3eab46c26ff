#pragma once

#include <span>
#include <vector>

#include "scratchbench/model.hpp"

namespace scratchbench {

// Incremental single-sequence forward with per-layer KV caches. Produces
// bitwise-identical activations to forward_model on the same prefix: every
// per-row computation goes through the same kernel and row helpers, and the
// gemm kernels guarantee row-count-independent accumulation order. Logits
// are only formed when asked for, which is the main decode-time saving.
class DecodeSession {
public:
    explicit DecodeSession(const TransformerWeights<float>& w);

    void reset();

    // Appends one token. For learned-position models, feeding at or beyond
    // max_seq_len sets the overflow flag instead of computing; the session
    // ignores further feeds once overflowed.
    void feed(int token);

    // Logits row for the current last position; recomputed lazily per feed.
    std::span<const float> last_logits();

    // Greedy argmax over last_logits (lowest id wins ties).
    int predict();

    bool overflowed() const { return overflow_; }
    int length() const { return pos_; }

private:
    const TransformerWeights<float>* w_;
    ModelConfig cfg_;
    int d_, dh_;
    float scale_;
    std::vector<double> slopes_;
    std::vector<std::vector<float>> kcache_, vcache_;  // per layer, pos_ rows each
    std::vector<float> x_, a_, q_, k_, v_, ctx_, scratch_, h_, logits_, srow_;
    int pos_ = 0;
    bool overflow_ = false;
    bool logits_valid_ = false;
};

}  // namespace scratchbench
