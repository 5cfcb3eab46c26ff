#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scratchbench/errors.hpp"
#include "scratchbench/params.hpp"
#include "scratchbench/positional.hpp"
#include "scratchbench/rng.hpp"
#include "scratchbench/tensor.hpp"

namespace scratchbench {

// Decoder-only transformer: pre-norm blocks, erf GELU MLP, tied input/output
// embeddings, no linear biases (layer norms carry the only additive terms).
struct ModelConfig {
    int n_layers = 2;
    int n_heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int vocab_size = 0;
    int max_seq_len = 512;
    PosScheme pos = PosScheme::learned;
    double rope_theta = 10000.0;
    double ln_eps = 1e-5;
    uint64_t init_seed = 1;
};

void validate_model_config(const ModelConfig& cfg);

// Weights in canonical registration order: tok_emb, pos_emb (learned scheme
// only), then per layer {ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, ff1,
// ff2}, then lnf_g, lnf_b. This order is the checkpoint traversal order and
// the Adam state layout.
template <class T>
class TransformerWeights {
public:
    TransformerWeights() = default;

    // Structure with zero weights (checkpoint loading target).
    static TransformerWeights zeros(const ModelConfig& cfg);

    // Gaussian init, std 0.02, with residual-output projections (wo, ff2)
    // scaled down by sqrt(2 * n_layers); layer norm gammas 1, betas 0.
    // Deterministic in cfg.init_seed.
    static TransformerWeights init(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    std::vector<ParamTensor<T>>& params() { return params_; }
    const std::vector<ParamTensor<T>>& params() const { return params_; }
    void zero_grad() { zero_grads(params_); }
    size_t param_count() const { return scratchbench::param_count(params_); }

    ParamTensor<T>& tok_emb() { return params_[0]; }
    const ParamTensor<T>& tok_emb() const { return params_[0]; }
    bool has_pos_emb() const { return cfg_.pos == PosScheme::learned; }
    ParamTensor<T>& pos_emb() {
        if (!has_pos_emb()) throw std::logic_error("pos_emb: scheme has no learned positions");
        return params_[1];
    }
    const ParamTensor<T>& pos_emb() const {
        if (!has_pos_emb()) throw std::logic_error("pos_emb: scheme has no learned positions");
        return params_[1];
    }

    struct LayerRefs {
        ParamTensor<T>*ln1_g, *ln1_b, *wq, *wk, *wv, *wo, *ln2_g, *ln2_b, *ff1, *ff2;
    };
    struct LayerCRefs {
        const ParamTensor<T>*ln1_g, *ln1_b, *wq, *wk, *wv, *wo, *ln2_g, *ln2_b, *ff1, *ff2;
    };
    LayerRefs layer(int i) {
        const size_t base = static_cast<size_t>(layer_base_(i));
        return LayerRefs{&params_[base],     &params_[base + 1], &params_[base + 2], &params_[base + 3],
                         &params_[base + 4], &params_[base + 5], &params_[base + 6], &params_[base + 7],
                         &params_[base + 8], &params_[base + 9]};
    }
    LayerCRefs layer(int i) const {
        const size_t base = static_cast<size_t>(layer_base_(i));
        return LayerCRefs{&params_[base],     &params_[base + 1], &params_[base + 2], &params_[base + 3],
                          &params_[base + 4], &params_[base + 5], &params_[base + 6], &params_[base + 7],
                          &params_[base + 8], &params_[base + 9]};
    }
    ParamTensor<T>& lnf_g() { return params_[params_.size() - 2]; }
    ParamTensor<T>& lnf_b() { return params_[params_.size() - 1]; }
    const ParamTensor<T>& lnf_g() const { return params_[params_.size() - 2]; }
    const ParamTensor<T>& lnf_b() const { return params_[params_.size() - 1]; }

private:
    int layer_base_(int i) const { return (has_pos_emb() ? 2 : 1) + 10 * i; }
    static TransformerWeights structure_(const ModelConfig& cfg);

    ModelConfig cfg_;
    std::vector<ParamTensor<T>> params_;
};

// Expected parameter count for a config; the structural oracle for tests.
size_t expected_param_count(const ModelConfig& cfg);

// One batch of padded example rows. tokens is batch*t_max ints, pad id 0;
// example e occupies rows [e*t_max, e*t_max + lengths[e]).
struct BatchView {
    const int* tokens = nullptr;
    const int* lengths = nullptr;
    int batch = 0;
    int t_max = 0;
};

template <class T>
struct ForwardOpts {
    bool want_logits = false;
    // Loss inputs aligned to logits rows: targets[i]/mask[i] label row i
    // (the caller shifts next-token labels into row space).
    const std::vector<int>* loss_targets = nullptr;
    const std::vector<uint8_t>* loss_mask = nullptr;
    CeStats* ce_stats = nullptr;
    AttnCapture<T>* capture = nullptr;  // attaches at capture->layer
};

template <class T>
struct ForwardOut {
    Tensor<T> x_embed;   // token (+ position) embeddings, the attribution input
    Tensor<T> h_final;   // after final layer norm
    Tensor<T> logits;    // valid iff want_logits
    Tensor<T> loss;      // valid iff loss inputs given
};

template <class T>
ForwardOut<T> forward_model(Tape<T>& tape, TransformerWeights<T>& w, const BatchView& batch,
                            const ForwardOpts<T>& opts = {});

// Full logits for a single sequence (values only; builds a throwaway tape).
template <class T>
std::vector<T> forward_logits(TransformerWeights<T>& w, std::span<const int> tokens);

// Greedy next-token choice for a single sequence (KV-cached decoder path).
int greedy_next(const TransformerWeights<float>& w, std::span<const int> tokens);

// -- template bodies --------------------------------------------------------

template <class T>
TransformerWeights<T> TransformerWeights<T>::structure_(const ModelConfig& cfg) {
    validate_model_config(cfg);
    TransformerWeights w;
    w.cfg_ = cfg;
    auto& ps = w.params_;
    ps.emplace_back("tok_emb", cfg.vocab_size, cfg.d_model);
    if (cfg.pos == PosScheme::learned) ps.emplace_back("pos_emb", cfg.max_seq_len, cfg.d_model);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        ps.emplace_back(p + "ln1_g", 1, cfg.d_model);
        ps.emplace_back(p + "ln1_b", 1, cfg.d_model);
        ps.emplace_back(p + "wq", cfg.d_model, cfg.d_model);
        ps.emplace_back(p + "wk", cfg.d_model, cfg.d_model);
        ps.emplace_back(p + "wv", cfg.d_model, cfg.d_model);
        ps.emplace_back(p + "wo", cfg.d_model, cfg.d_model);
        ps.emplace_back(p + "ln2_g", 1, cfg.d_model);
        ps.emplace_back(p + "ln2_b", 1, cfg.d_model);
        ps.emplace_back(p + "ff1", cfg.d_model, cfg.d_ff);
        ps.emplace_back(p + "ff2", cfg.d_ff, cfg.d_model);
    }
    ps.emplace_back("lnf_g", 1, cfg.d_model);
    ps.emplace_back("lnf_b", 1, cfg.d_model);
    return w;
}

template <class T>
TransformerWeights<T> TransformerWeights<T>::zeros(const ModelConfig& cfg) {
    return structure_(cfg);
}

template <class T>
TransformerWeights<T> TransformerWeights<T>::init(const ModelConfig& cfg) {
    TransformerWeights w = structure_(cfg);
    Rng rng(derive_seed(cfg.init_seed, "model-init"));
    const double res_std = 0.02 / std::sqrt(2.0 * cfg.n_layers);
    for (auto& p : w.params_) {
        const bool is_gamma = p.name.size() >= 2 && p.name.compare(p.name.size() - 2, 2, "_g") == 0;
        const bool is_beta = p.name.size() >= 2 && p.name.compare(p.name.size() - 2, 2, "_b") == 0;
        if (is_gamma) {
            std::fill(p.w.begin(), p.w.end(), T(1));
        } else if (is_beta) {
            std::fill(p.w.begin(), p.w.end(), T(0));
        } else {
            const bool residual_proj = p.name.ends_with(".wo") || p.name.ends_with(".ff2");
            const double std = residual_proj ? res_std : 0.02;
            for (auto& x : p.w) x = static_cast<T>(rng.gaussian() * std);
        }
    }
    return w;
}

template <class T>
ForwardOut<T> forward_model(Tape<T>& tape, TransformerWeights<T>& w, const BatchView& batch,
                            const ForwardOpts<T>& opts) {
    const ModelConfig& cfg = w.config();
    const int n = batch.batch * batch.t_max;
    if (batch.batch <= 0 || batch.t_max <= 0) throw std::invalid_argument("forward_model: empty batch");

    std::vector<int> toks(static_cast<size_t>(n)), poss(static_cast<size_t>(n));
    std::vector<int> offsets(static_cast<size_t>(batch.batch)), lens(static_cast<size_t>(batch.batch));
    for (int e = 0; e < batch.batch; ++e) {
        const int len = batch.lengths[e];
        if (len <= 0 || len > batch.t_max) throw std::invalid_argument("forward_model: bad example length");
        offsets[static_cast<size_t>(e)] = e * batch.t_max;
        lens[static_cast<size_t>(e)] = len;
        for (int i = 0; i < batch.t_max; ++i) {
            const size_t r = static_cast<size_t>(e) * batch.t_max + i;
            toks[r] = batch.tokens[r];
            poss[r] = i < len ? i : 0;
        }
    }

    auto leaf_of = [&tape](ParamTensor<T>& p) { return tape.param(p.w.data(), p.g.data(), p.rows, p.cols); };

    Tensor<T> emb = leaf_of(w.tok_emb());
    const bool learned = cfg.pos == PosScheme::learned;
    Tensor<T> posemb = learned ? leaf_of(w.pos_emb()) : emb;

    ForwardOut<T> out;
    out.x_embed = tape.embed(emb, posemb, learned, std::move(toks), std::move(poss));
    Tensor<T> x = out.x_embed;

    AttnSpec<T> aspec;
    aspec.n_heads = cfg.n_heads;
    aspec.scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.d_model / cfg.n_heads)));
    aspec.scheme = cfg.pos == PosScheme::learned ? PosScheme::none : cfg.pos;
    aspec.rope_theta = cfg.rope_theta;
    if (cfg.pos == PosScheme::alibi) aspec.alibi_slopes = linear_bias_slopes(cfg.n_heads);
    aspec.offsets = offsets;
    aspec.lengths = lens;

    const T eps = static_cast<T>(cfg.ln_eps);
    for (int l = 0; l < cfg.n_layers; ++l) {
        auto lw = w.layer(l);
        Tensor<T> a = tape.layer_norm(x, leaf_of(*lw.ln1_g), leaf_of(*lw.ln1_b), eps);
        Tensor<T> q = tape.matmul(a, leaf_of(*lw.wq));
        Tensor<T> k = tape.matmul(a, leaf_of(*lw.wk));
        Tensor<T> v = tape.matmul(a, leaf_of(*lw.wv));
        AttnSpec<T> spec = aspec;
        spec.capture = (opts.capture && opts.capture->layer == l) ? opts.capture : nullptr;
        Tensor<T> att = tape.causal_attention(q, k, v, spec);
        Tensor<T> proj = tape.matmul(att, leaf_of(*lw.wo));
        x = tape.add(x, proj);
        Tensor<T> b = tape.layer_norm(x, leaf_of(*lw.ln2_g), leaf_of(*lw.ln2_b), eps);
        Tensor<T> f = tape.matmul(b, leaf_of(*lw.ff1));
        f = tape.gelu(f);
        f = tape.matmul(f, leaf_of(*lw.ff2));
        x = tape.add(x, f);
    }
    out.h_final = tape.layer_norm(x, leaf_of(w.lnf_g()), leaf_of(w.lnf_b()), eps);

    if (opts.want_logits) out.logits = tape.matmul_nt(out.h_final, emb);
    if (opts.loss_targets) {
        if (!opts.loss_mask) throw std::invalid_argument("forward_model: loss_targets without loss_mask");
        out.loss = tape.tied_logits_masked_nll(out.h_final, emb, *opts.loss_targets, *opts.loss_mask,
                                               opts.ce_stats);
    }
    return out;
}

template <class T>
std::vector<T> forward_logits(TransformerWeights<T>& w, std::span<const int> tokens) {
    Tape<T> tape;
    const int len = static_cast<int>(tokens.size());
    std::vector<int> toks(tokens.begin(), tokens.end());
    BatchView bv{toks.data(), &len, 1, len};
    ForwardOpts<T> opts;
    opts.want_logits = true;
    ForwardOut<T> fo = forward_model(tape, w, bv, opts);
    return std::vector<T>(fo.logits.data(), fo.logits.data() + fo.logits.size());
}

}  // namespace scratchbench
