#include "scratchbench/decode.hpp"

#include "scratchbench/kernels.hpp"
#include "scratchbench/rowmath.hpp"

namespace scratchbench {

DecodeSession::DecodeSession(const TransformerWeights<float>& w)
    : w_(&w), cfg_(w.config()), d_(cfg_.d_model), dh_(cfg_.d_model / cfg_.n_heads) {
    scale_ = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dh_)));
    if (cfg_.pos == PosScheme::alibi) slopes_ = linear_bias_slopes(cfg_.n_heads);
    kcache_.resize(static_cast<size_t>(cfg_.n_layers));
    vcache_.resize(static_cast<size_t>(cfg_.n_layers));
    x_.resize(static_cast<size_t>(d_));
    a_.resize(static_cast<size_t>(d_));
    q_.resize(static_cast<size_t>(d_));
    k_.resize(static_cast<size_t>(d_));
    v_.resize(static_cast<size_t>(d_));
    ctx_.resize(static_cast<size_t>(d_));
    scratch_.resize(static_cast<size_t>(std::max(cfg_.d_ff, d_)));
    h_.resize(static_cast<size_t>(d_));
    logits_.resize(static_cast<size_t>(cfg_.vocab_size));
}

void DecodeSession::reset() {
    for (auto& c : kcache_) c.clear();
    for (auto& c : vcache_) c.clear();
    pos_ = 0;
    overflow_ = false;
    logits_valid_ = false;
}

void DecodeSession::feed(int token) {
    if (overflow_) return;
    if (cfg_.pos == PosScheme::learned && pos_ >= cfg_.max_seq_len) {
        overflow_ = true;
        return;
    }
    const TransformerWeights<float>& wts = *w_;
    const float eps = static_cast<float>(cfg_.ln_eps);

    rowm::embed_row(x_.data(), wts.tok_emb().w.data(),
                    cfg_.pos == PosScheme::learned ? wts.pos_emb().w.data() : nullptr, token, pos_, d_);

    for (int l = 0; l < cfg_.n_layers; ++l) {
        auto lw = wts.layer(l);
        rowm::layer_norm_row(a_.data(), x_.data(), lw.ln1_g->w.data(), lw.ln1_b->w.data(), d_, eps);
        kern::gemm_nn(q_.data(), a_.data(), lw.wq->w.data(), 1, d_, d_, false);
        kern::gemm_nn(k_.data(), a_.data(), lw.wk->w.data(), 1, d_, d_, false);
        kern::gemm_nn(v_.data(), a_.data(), lw.wv->w.data(), 1, d_, d_, false);
        if (cfg_.pos == PosScheme::rotary) {
            for (int h = 0; h < cfg_.n_heads; ++h) {
                rotary_apply(q_.data() + static_cast<size_t>(h) * dh_, dh_, pos_, cfg_.rope_theta);
                rotary_apply(k_.data() + static_cast<size_t>(h) * dh_, dh_, pos_, cfg_.rope_theta);
            }
        }
        auto& kc = kcache_[static_cast<size_t>(l)];
        auto& vc = vcache_[static_cast<size_t>(l)];
        kc.insert(kc.end(), k_.begin(), k_.end());
        vc.insert(vc.end(), v_.begin(), v_.end());

        const int i = pos_;
        std::fill(ctx_.begin(), ctx_.end(), 0.0f);
        srow_.resize(static_cast<size_t>(i) + 1);
        for (int h = 0; h < cfg_.n_heads; ++h) {
            const float* qh = q_.data() + static_cast<size_t>(h) * dh_;
            for (int j = 0; j <= i; ++j) {
                float s = scale_ * kern::dot(qh, kc.data() + static_cast<size_t>(j) * d_ + static_cast<size_t>(h) * dh_, dh_);
                if (cfg_.pos == PosScheme::alibi) {
                    s += alibi_bias(static_cast<float>(slopes_[static_cast<size_t>(h)]), i, j);
                }
                srow_[static_cast<size_t>(j)] = s;
            }
            rowm::softmax_row(srow_.data(), i + 1);
            float* ctxh = ctx_.data() + static_cast<size_t>(h) * dh_;
            for (int j = 0; j <= i; ++j) {
                kern::axpy(ctxh, srow_[static_cast<size_t>(j)],
                           vc.data() + static_cast<size_t>(j) * d_ + static_cast<size_t>(h) * dh_, dh_);
            }
        }
        kern::gemm_nn(scratch_.data(), ctx_.data(), lw.wo->w.data(), 1, d_, d_, false);
        for (int j = 0; j < d_; ++j) x_[static_cast<size_t>(j)] = x_[static_cast<size_t>(j)] + scratch_[static_cast<size_t>(j)];

        rowm::layer_norm_row(a_.data(), x_.data(), lw.ln2_g->w.data(), lw.ln2_b->w.data(), d_, eps);
        kern::gemm_nn(scratch_.data(), a_.data(), lw.ff1->w.data(), 1, cfg_.d_ff, d_, false);
        for (int j = 0; j < cfg_.d_ff; ++j) scratch_[static_cast<size_t>(j)] = rowm::gelu_one(scratch_[static_cast<size_t>(j)]);
        kern::gemm_nn(ctx_.data(), scratch_.data(), lw.ff2->w.data(), 1, d_, cfg_.d_ff, false);
        for (int j = 0; j < d_; ++j) x_[static_cast<size_t>(j)] = x_[static_cast<size_t>(j)] + ctx_[static_cast<size_t>(j)];
    }
    rowm::layer_norm_row(h_.data(), x_.data(), wts.lnf_g().w.data(), wts.lnf_b().w.data(), d_, eps);
    logits_valid_ = false;
    pos_ += 1;
}

std::span<const float> DecodeSession::last_logits() {
    if (pos_ == 0) throw std::logic_error("last_logits: nothing fed");
    if (!logits_valid_) {
        kern::gemm_nt(logits_.data(), h_.data(), w_->tok_emb().w.data(), 1, cfg_.vocab_size, d_, false);
        logits_valid_ = true;
    }
    return {logits_.data(), logits_.size()};
}

int DecodeSession::predict() {
    if (overflow_) return 0;
    const auto lg = last_logits();
    return rowm::argmax_row(lg.data(), static_cast<int>(lg.size()));
}

int greedy_next(const TransformerWeights<float>& w, std::span<const int> tokens) {
    DecodeSession sess(w);
    for (const int t : tokens) sess.feed(t);
    if (sess.overflowed()) {
        throw PositionOverflow("greedy_next: sequence exceeds max_seq_len for learned positions");
    }
    return sess.predict();
}

}  // namespace scratchbench
