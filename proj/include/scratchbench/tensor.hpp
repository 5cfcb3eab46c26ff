#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scratchbench/errors.hpp"
#include "scratchbench/kernels.hpp"
#include "scratchbench/positional.hpp"
#include "scratchbench/rowmath.hpp"

// Reverse-mode autodiff over rank-2 tensors. A Tape owns every intermediate
// of one forward pass; ops append nodes and record backward closures, and
// backward() replays them in reverse creation order. Parameter leaves view
// external storage, so after backward() the parameter gradients sit directly
// in the owning store. A tape is single-shot: one forward, one backward.

namespace scratchbench {

template <class T>
class Tape;

template <class T>
class Tensor {
public:
    Tensor() = default;
    bool valid() const { return tape_ != nullptr; }
    int rows() const { return tape_->slot_(id_).rows; }
    int cols() const { return tape_->slot_(id_).cols; }
    size_t size() const { return static_cast<size_t>(rows()) * cols(); }
    T* data() { return tape_->slot_(id_).vals; }
    const T* data() const { return tape_->slot_(id_).vals; }
    T* grad_data() { return tape_->slot_(id_).grad; }
    const T* grad_data() const { return tape_->slot_(id_).grad; }
    T at(int r, int c) const { return data()[static_cast<size_t>(r) * cols() + c]; }
    T grad_at(int r, int c) const { return grad_data()[static_cast<size_t>(r) * cols() + c]; }
    T scalar() const { return data()[0]; }

private:
    friend class Tape<T>;
    Tensor(Tape<T>* tape, int id) : tape_(tape), id_(id) {}
    Tape<T>* tape_ = nullptr;
    int id_ = -1;
};

// Attention score/prob probe for one example of one forward call. Tests use
// it to assert positional-scheme properties without exporting internals
// through the public result types.
template <class T>
struct AttnCapture {
    int example = 0;
    int layer = 0;
    // captured[h][i] = raw scores (bias included, pre-softmax) for query i, keys 0..i
    std::vector<std::vector<std::vector<T>>> scores;
};

// Geometry + positional scheme of one fused attention call. Rows of q/k/v
// are a concatenation of per-example blocks; each block attends only within
// itself, causally.
template <class T>
struct AttnSpec {
    int n_heads = 1;
    T scale = T(1);
    PosScheme scheme = PosScheme::none;
    double rope_theta = 10000.0;
    std::vector<double> alibi_slopes;  // per head, alibi only
    std::vector<int> offsets;          // per example: first row
    std::vector<int> lengths;          // per example: row count
    AttnCapture<T>* capture = nullptr;
};

// Side-channel statistics from a cross-entropy op (teacher-forced hit rate).
struct CeStats {
    long token_hits = 0;
    long token_total = 0;
};

template <class T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // --- leaves -----------------------------------------------------------

    Tensor<T> leaf(int rows, int cols) {
        const int id = new_slot_(rows, cols);
        return Tensor<T>(this, id);
    }

    Tensor<T> leaf(std::vector<T> vals, int rows, int cols) {
        if (vals.size() != static_cast<size_t>(rows) * cols) throw std::invalid_argument("leaf: size mismatch");
        const int id = new_slot_(rows, cols);
        std::copy(vals.begin(), vals.end(), slots_[static_cast<size_t>(id)].vals);
        return Tensor<T>(this, id);
    }

    // Leaf viewing external parameter storage; backward writes grads there.
    Tensor<T> param(T* vals, T* grad, int rows, int cols) {
        if (!vals || !grad) throw std::invalid_argument("param: null storage");
        Slot s;
        s.rows = rows;
        s.cols = cols;
        s.vals = vals;
        s.grad = grad;
        slots_.push_back(std::move(s));
        return Tensor<T>(this, static_cast<int>(slots_.size()) - 1);
    }

    // --- elementwise / reduction ops ---------------------------------------

    Tensor<T> add(Tensor<T> a, Tensor<T> b) {
        check_same_shape_(a, b, "add");
        Tensor<T> out = leaf(a.rows(), a.cols());
        const size_t n = a.size();
        for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
        record_(out, [ia = a.id_, ib = b.id_, io = out.id_](Tape& t) {
            auto& o = t.slot_(io);
            const size_t n2 = o.count();
            for (size_t i = 0; i < n2; ++i) {
                t.slot_(ia).grad[i] += o.grad[i];
                t.slot_(ib).grad[i] += o.grad[i];
            }
        });
        return out;
    }

    Tensor<T> sub(Tensor<T> a, Tensor<T> b) {
        check_same_shape_(a, b, "sub");
        Tensor<T> out = leaf(a.rows(), a.cols());
        const size_t n = a.size();
        for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
        record_(out, [ia = a.id_, ib = b.id_, io = out.id_](Tape& t) {
            auto& o = t.slot_(io);
            const size_t n2 = o.count();
            for (size_t i = 0; i < n2; ++i) {
                t.slot_(ia).grad[i] += o.grad[i];
                t.slot_(ib).grad[i] -= o.grad[i];
            }
        });
        return out;
    }

    Tensor<T> mul_elem(Tensor<T> a, Tensor<T> b) {
        check_same_shape_(a, b, "mul_elem");
        Tensor<T> out = leaf(a.rows(), a.cols());
        const size_t n = a.size();
        for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
        record_(out, [ia = a.id_, ib = b.id_, io = out.id_](Tape& t) {
            auto& o = t.slot_(io);
            const size_t n2 = o.count();
            for (size_t i = 0; i < n2; ++i) {
                t.slot_(ia).grad[i] += o.grad[i] * t.slot_(ib).vals[i];
                t.slot_(ib).grad[i] += o.grad[i] * t.slot_(ia).vals[i];
            }
        });
        return out;
    }

    Tensor<T> scale(Tensor<T> a, T c) {
        Tensor<T> out = leaf(a.rows(), a.cols());
        const size_t n = a.size();
        for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * c;
        record_(out, [ia = a.id_, io = out.id_, c](Tape& t) {
            auto& o = t.slot_(io);
            const size_t n2 = o.count();
            for (size_t i = 0; i < n2; ++i) t.slot_(ia).grad[i] += o.grad[i] * c;
        });
        return out;
    }

    Tensor<T> gelu(Tensor<T> a) {
        Tensor<T> out = leaf(a.rows(), a.cols());
        const size_t n = a.size();
        for (size_t i = 0; i < n; ++i) out.data()[i] = rowm::gelu_one(a.data()[i]);
        record_(out, [ia = a.id_, io = out.id_](Tape& t) {
            auto& o = t.slot_(io);
            auto& in = t.slot_(ia);
            const size_t n2 = o.count();
            for (size_t i = 0; i < n2; ++i) in.grad[i] += o.grad[i] * rowm::gelu_deriv_one(in.vals[i]);
        });
        return out;
    }

    Tensor<T> sum_all(Tensor<T> a) {
        Tensor<T> out = leaf(1, 1);
        T acc = T(0);
        const size_t n = a.size();
        for (size_t i = 0; i < n; ++i) acc += a.data()[i];
        out.data()[0] = acc;
        record_(out, [ia = a.id_, io = out.id_](Tape& t) {
            const T g = t.slot_(io).grad[0];
            auto& in = t.slot_(ia);
            const size_t n2 = in.count();
            for (size_t i = 0; i < n2; ++i) in.grad[i] += g;
        });
        return out;
    }

    Tensor<T> select(Tensor<T> a, int r, int c) {
        if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols()) throw std::invalid_argument("select: out of range");
        Tensor<T> out = leaf(1, 1);
        out.data()[0] = a.at(r, c);
        record_(out, [ia = a.id_, io = out.id_, r, c](Tape& t) {
            auto& in = t.slot_(ia);
            in.grad[static_cast<size_t>(r) * in.cols + c] += t.slot_(io).grad[0];
        });
        return out;
    }

    // --- matrix ops ---------------------------------------------------------

    // out = a * b
    Tensor<T> matmul(Tensor<T> a, Tensor<T> b) {
        if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dims differ");
        const int m = a.rows(), k = a.cols(), n = b.cols();
        Tensor<T> out = leaf(m, n);
        kern::gemm_nn(out.data(), a.data(), b.data(), m, n, k, false);
        record_(out, [ia = a.id_, ib = b.id_, io = out.id_, m, n, k](Tape& t) {
            auto& o = t.slot_(io);
            kern::gemm_nt(t.slot_(ia).grad, o.grad, t.slot_(ib).vals, m, k, n, true);
            kern::gemm_tn(t.slot_(ib).grad, t.slot_(ia).vals, o.grad, k, n, m, true);
        });
        return out;
    }

    // out = a * b^T; b given as (n x k)
    Tensor<T> matmul_nt(Tensor<T> a, Tensor<T> b) {
        if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dims differ");
        const int m = a.rows(), k = a.cols(), n = b.rows();
        Tensor<T> out = leaf(m, n);
        kern::gemm_nt(out.data(), a.data(), b.data(), m, n, k, false);
        record_(out, [ia = a.id_, ib = b.id_, io = out.id_, m, n, k](Tape& t) {
            auto& o = t.slot_(io);
            kern::gemm_nn(t.slot_(ia).grad, o.grad, t.slot_(ib).vals, m, k, n, true);
            kern::gemm_tn(t.slot_(ib).grad, o.grad, t.slot_(ia).vals, n, k, m, true);
        });
        return out;
    }

    // --- rows ops -----------------------------------------------------------

    Tensor<T> layer_norm(Tensor<T> x, Tensor<T> gamma, Tensor<T> beta, T eps) {
        const int n = x.rows(), d = x.cols();
        if (gamma.size() != static_cast<size_t>(d) || beta.size() != static_cast<size_t>(d)) {
            throw std::invalid_argument("layer_norm: gamma/beta size");
        }
        Tensor<T> out = leaf(n, d);
        std::vector<T> mean(static_cast<size_t>(n)), rstd(static_cast<size_t>(n));
        for (int r = 0; r < n; ++r) {
            rowm::layer_norm_row(out.data() + static_cast<size_t>(r) * d, x.data() + static_cast<size_t>(r) * d,
                                 gamma.data(), beta.data(), d, eps,
                                 &mean[static_cast<size_t>(r)], &rstd[static_cast<size_t>(r)]);
        }
        record_(out, [ix = x.id_, ig = gamma.id_, ibt = beta.id_, io = out.id_, d, n,
                      mean = std::move(mean), rstd = std::move(rstd)](Tape& t) {
            auto& xs = t.slot_(ix);
            auto& gs = t.slot_(ig);
            auto& bs = t.slot_(ibt);
            auto& os = t.slot_(io);
            std::vector<T> xhat(static_cast<size_t>(d));
            for (int r = 0; r < n; ++r) {
                const T* xr = xs.vals + static_cast<size_t>(r) * d;
                const T* dy = os.grad + static_cast<size_t>(r) * d;
                const T mu = mean[static_cast<size_t>(r)];
                const T rs = rstd[static_cast<size_t>(r)];
                T m_dxhat = T(0), m_dxhat_x = T(0);
                for (int j = 0; j < d; ++j) {
                    xhat[static_cast<size_t>(j)] = (xr[j] - mu) * rs;
                    gs.grad[j] += dy[j] * xhat[static_cast<size_t>(j)];
                    bs.grad[j] += dy[j];
                    const T dxh = dy[j] * gs.vals[j];
                    m_dxhat += dxh;
                    m_dxhat_x += dxh * xhat[static_cast<size_t>(j)];
                }
                m_dxhat /= static_cast<T>(d);
                m_dxhat_x /= static_cast<T>(d);
                T* dx = xs.grad + static_cast<size_t>(r) * d;
                for (int j = 0; j < d; ++j) {
                    const T dxh = dy[j] * gs.vals[j];
                    dx[j] += rs * (dxh - m_dxhat - xhat[static_cast<size_t>(j)] * m_dxhat_x);
                }
            }
        });
        return out;
    }

    Tensor<T> softmax_rows(Tensor<T> x) {
        const int n = x.rows(), d = x.cols();
        Tensor<T> out = leaf(n, d);
        for (int r = 0; r < n; ++r) {
            const T* src = x.data() + static_cast<size_t>(r) * d;
            T* dst = out.data() + static_cast<size_t>(r) * d;
            for (int j = 0; j < d; ++j) dst[j] = src[j];
            rowm::softmax_row(dst, d);
        }
        record_(out, [ix = x.id_, io = out.id_, n, d](Tape& t) {
            auto& xs = t.slot_(ix);
            auto& os = t.slot_(io);
            for (int r = 0; r < n; ++r) {
                const T* p = os.vals + static_cast<size_t>(r) * d;
                const T* dy = os.grad + static_cast<size_t>(r) * d;
                T dotpd = T(0);
                for (int j = 0; j < d; ++j) dotpd += p[j] * dy[j];
                T* dx = xs.grad + static_cast<size_t>(r) * d;
                for (int j = 0; j < d; ++j) dx[j] += p[j] * (dy[j] - dotpd);
            }
        });
        return out;
    }

    // Rows of the token table (plus learned position rows when pos_table is
    // valid) gathered into a contiguous activation block.
    Tensor<T> embed(Tensor<T> tok_table, Tensor<T> pos_table, bool use_pos,
                    std::vector<int> tokens, std::vector<int> positions) {
        const int n = static_cast<int>(tokens.size());
        const int d = tok_table.cols();
        if (positions.size() != tokens.size()) throw std::invalid_argument("embed: tokens/positions size");
        if (use_pos) {
            for (const int p : positions) {
                if (p >= pos_table.rows()) {
                    throw PositionOverflow("embed: position " + std::to_string(p) + " >= max_seq_len " +
                                           std::to_string(pos_table.rows()));
                }
            }
        }
        Tensor<T> out = leaf(n, d);
        for (int i = 0; i < n; ++i) {
            const int tok = tokens[static_cast<size_t>(i)];
            if (tok < 0 || tok >= tok_table.rows()) throw std::invalid_argument("embed: token id out of range");
            rowm::embed_row(out.data() + static_cast<size_t>(i) * d, tok_table.data(),
                            use_pos ? pos_table.data() : nullptr, tok, positions[static_cast<size_t>(i)], d);
        }
        record_(out, [ie = tok_table.id_, ip = pos_table.id_, io = out.id_, use_pos, d,
                      tokens = std::move(tokens), positions = std::move(positions)](Tape& t) {
            auto& os = t.slot_(io);
            auto& es = t.slot_(ie);
            for (size_t i = 0; i < tokens.size(); ++i) {
                const T* dy = os.grad + i * static_cast<size_t>(d);
                kern::axpy(es.grad + static_cast<size_t>(tokens[i]) * d, T(1), dy, d);
                if (use_pos) {
                    kern::axpy(t.slot_(ip).grad + static_cast<size_t>(positions[i]) * d, T(1), dy, d);
                }
            }
        });
        return out;
    }

    // Fused multi-head causal self-attention over per-example row blocks.
    // Handles rotary rotation and ALiBi score bias internally; stores the
    // rotated q/k copies and the softmax rows for the backward pass.
    Tensor<T> causal_attention(Tensor<T> q, Tensor<T> k, Tensor<T> v, const AttnSpec<T>& spec) {
        const int n = q.rows(), d = q.cols();
        if (k.rows() != n || v.rows() != n || k.cols() != d || v.cols() != d) {
            throw std::invalid_argument("causal_attention: q/k/v shape mismatch");
        }
        if (d % spec.n_heads != 0) throw std::invalid_argument("causal_attention: d % heads != 0");
        const int dh = d / spec.n_heads;
        if (spec.scheme == PosScheme::rotary && dh % 2 != 0) {
            throw std::invalid_argument("causal_attention: rotary needs even head dim");
        }
        if (spec.scheme == PosScheme::alibi && spec.alibi_slopes.size() != static_cast<size_t>(spec.n_heads)) {
            throw std::invalid_argument("causal_attention: slopes size != heads");
        }

        std::vector<T> qr(q.data(), q.data() + q.size());
        std::vector<T> kr(k.data(), k.data() + k.size());
        if (spec.scheme == PosScheme::rotary) {
            for (size_t g = 0; g < spec.offsets.size(); ++g) {
                for (int i = 0; i < spec.lengths[g]; ++i) {
                    const size_t row = static_cast<size_t>(spec.offsets[g] + i) * d;
                    for (int h = 0; h < spec.n_heads; ++h) {
                        rotary_apply(qr.data() + row + static_cast<size_t>(h) * dh, dh, i, spec.rope_theta);
                        rotary_apply(kr.data() + row + static_cast<size_t>(h) * dh, dh, i, spec.rope_theta);
                    }
                }
            }
        }

        // packed softmax rows: per example, per head, per query: i+1 probs
        std::vector<size_t> pbase(spec.offsets.size());
        size_t ptotal = 0;
        for (size_t g = 0; g < spec.offsets.size(); ++g) {
            pbase[g] = ptotal;
            const size_t len = static_cast<size_t>(spec.lengths[g]);
            ptotal += static_cast<size_t>(spec.n_heads) * len * (len + 1) / 2;
        }
        std::vector<T> probs(ptotal);

        Tensor<T> out = leaf(n, d);
        std::vector<T> srow;
        if (spec.capture) {
            spec.capture->scores.assign(static_cast<size_t>(spec.n_heads), {});
        }
        for (size_t g = 0; g < spec.offsets.size(); ++g) {
            const int off = spec.offsets[g];
            const int len = spec.lengths[g];
            for (int h = 0; h < spec.n_heads; ++h) {
                const size_t hb = pbase[g] + static_cast<size_t>(h) * (static_cast<size_t>(len) * (len + 1) / 2);
                const T slope = spec.scheme == PosScheme::alibi ? static_cast<T>(spec.alibi_slopes[static_cast<size_t>(h)]) : T(0);
                if (spec.capture && static_cast<int>(g) == spec.capture->example) {
                    spec.capture->scores[static_cast<size_t>(h)].resize(static_cast<size_t>(len));
                }
                for (int i = 0; i < len; ++i) {
                    srow.resize(static_cast<size_t>(i) + 1);
                    const T* qrow = qr.data() + static_cast<size_t>(off + i) * d + static_cast<size_t>(h) * dh;
                    for (int j = 0; j <= i; ++j) {
                        T s = spec.scale *
                              kern::dot(qrow, kr.data() + static_cast<size_t>(off + j) * d + static_cast<size_t>(h) * dh, dh);
                        if (spec.scheme == PosScheme::alibi) s += alibi_bias(slope, i, j);
                        srow[static_cast<size_t>(j)] = s;
                    }
                    if (spec.capture && static_cast<int>(g) == spec.capture->example) {
                        spec.capture->scores[static_cast<size_t>(h)][static_cast<size_t>(i)] = srow;
                    }
                    rowm::softmax_row(srow.data(), i + 1);
                    const size_t rowbase = hb + static_cast<size_t>(i) * (i + 1) / 2;
                    T* orow = out.data() + static_cast<size_t>(off + i) * d + static_cast<size_t>(h) * dh;
                    for (int j = 0; j <= i; ++j) {
                        probs[rowbase + static_cast<size_t>(j)] = srow[static_cast<size_t>(j)];
                        kern::axpy(orow, srow[static_cast<size_t>(j)],
                                   v.data() + static_cast<size_t>(off + j) * d + static_cast<size_t>(h) * dh, dh);
                    }
                }
            }
        }

        record_(out, [iq = q.id_, ik = k.id_, iv = v.id_, io = out.id_, spec2 = spec, d, dh,
                      qr = std::move(qr), kr = std::move(kr), probs = std::move(probs),
                      pbase = std::move(pbase), n](Tape& t) {
            auto& qs = t.slot_(iq);
            auto& ks = t.slot_(ik);
            auto& vs = t.slot_(iv);
            auto& os = t.slot_(io);
            std::vector<T> dqr(static_cast<size_t>(n) * d, T(0));
            std::vector<T> dkr(static_cast<size_t>(n) * d, T(0));
            std::vector<T> dp, ds;
            for (size_t g = 0; g < spec2.offsets.size(); ++g) {
                const int off = spec2.offsets[g];
                const int len = spec2.lengths[g];
                for (int h = 0; h < spec2.n_heads; ++h) {
                    const size_t hb = pbase[g] + static_cast<size_t>(h) * (static_cast<size_t>(len) * (len + 1) / 2);
                    for (int i = 0; i < len; ++i) {
                        const size_t rowbase = hb + static_cast<size_t>(i) * (i + 1) / 2;
                        const T* dctx = os.grad + static_cast<size_t>(off + i) * d + static_cast<size_t>(h) * dh;
                        dp.resize(static_cast<size_t>(i) + 1);
                        ds.resize(static_cast<size_t>(i) + 1);
                        T pdot = T(0);
                        for (int j = 0; j <= i; ++j) {
                            dp[static_cast<size_t>(j)] =
                                kern::dot(dctx, vs.vals + static_cast<size_t>(off + j) * d + static_cast<size_t>(h) * dh, dh);
                            pdot += probs[rowbase + static_cast<size_t>(j)] * dp[static_cast<size_t>(j)];
                        }
                        for (int j = 0; j <= i; ++j) {
                            const T pj = probs[rowbase + static_cast<size_t>(j)];
                            ds[static_cast<size_t>(j)] = pj * (dp[static_cast<size_t>(j)] - pdot);
                            kern::axpy(vs.grad + static_cast<size_t>(off + j) * d + static_cast<size_t>(h) * dh, pj, dctx, dh);
                        }
                        T* dq_i = dqr.data() + static_cast<size_t>(off + i) * d + static_cast<size_t>(h) * dh;
                        const T* q_i = qr.data() + static_cast<size_t>(off + i) * d + static_cast<size_t>(h) * dh;
                        for (int j = 0; j <= i; ++j) {
                            const T c = spec2.scale * ds[static_cast<size_t>(j)];
                            kern::axpy(dq_i, c, kr.data() + static_cast<size_t>(off + j) * d + static_cast<size_t>(h) * dh, dh);
                            kern::axpy(dkr.data() + static_cast<size_t>(off + j) * d + static_cast<size_t>(h) * dh, c, q_i, dh);
                        }
                    }
                }
            }
            if (spec2.scheme == PosScheme::rotary) {
                for (size_t g = 0; g < spec2.offsets.size(); ++g) {
                    for (int i = 0; i < spec2.lengths[g]; ++i) {
                        const size_t row = static_cast<size_t>(spec2.offsets[g] + i) * d;
                        for (int h = 0; h < spec2.n_heads; ++h) {
                            rotary_unapply(dqr.data() + row + static_cast<size_t>(h) * dh, dh, i, spec2.rope_theta);
                            rotary_unapply(dkr.data() + row + static_cast<size_t>(h) * dh, dh, i, spec2.rope_theta);
                        }
                    }
                }
            }
            const size_t total = static_cast<size_t>(n) * d;
            for (size_t idx = 0; idx < total; ++idx) {
                qs.grad[idx] += dqr[idx];
                ks.grad[idx] += dkr[idx];
            }
        });
        return out;
    }

    // Mean NLL over rows where mask is set, treating targets[i] as the label
    // for logits row i. Rows with mask unset contribute nothing and their
    // logits gradient stays exactly zero.
    Tensor<T> masked_cross_entropy(Tensor<T> logits, const std::vector<int>& targets,
                                   const std::vector<uint8_t>& mask, CeStats* stats = nullptr) {
        const int n = logits.rows(), v = logits.cols();
        if (targets.size() != static_cast<size_t>(n) || mask.size() != static_cast<size_t>(n)) {
            throw std::invalid_argument("masked_cross_entropy: targets/mask size != logits rows");
        }
        std::vector<int> rows;
        for (int i = 0; i < n; ++i) {
            if (mask[static_cast<size_t>(i)]) rows.push_back(i);
        }
        if (rows.empty()) throw std::invalid_argument("masked_cross_entropy: no unmasked rows");
        const size_t m = rows.size();
        std::vector<T> probs(m * static_cast<size_t>(v));
        std::vector<int> tgt(m);
        T loss = T(0);
        for (size_t r = 0; r < m; ++r) {
            const int row = rows[r];
            const int target = targets[static_cast<size_t>(row)];
            if (target < 0 || target >= v) throw std::invalid_argument("masked_cross_entropy: target out of range");
            const T* srow = logits.data() + static_cast<size_t>(row) * v;
            const T lse = rowm::log_sum_exp_row(srow, v);
            loss += lse - srow[target];
            T* prow = probs.data() + r * static_cast<size_t>(v);
            for (int j = 0; j < v; ++j) prow[j] = std::exp(srow[j] - lse);
            tgt[r] = target;
            if (stats) {
                stats->token_total += 1;
                stats->token_hits += rowm::argmax_row(srow, v) == target ? 1 : 0;
            }
        }
        loss /= static_cast<T>(m);
        Tensor<T> out = leaf(1, 1);
        out.data()[0] = loss;
        record_(out, [il = logits.id_, io = out.id_, rows = std::move(rows), tgt = std::move(tgt),
                      probs = std::move(probs), v](Tape& t) {
            const T g = t.slot_(io).grad[0] / static_cast<T>(rows.size());
            auto& ls = t.slot_(il);
            for (size_t r = 0; r < rows.size(); ++r) {
                T* drow = ls.grad + static_cast<size_t>(rows[r]) * v;
                const T* prow = probs.data() + r * static_cast<size_t>(v);
                for (int j = 0; j < v; ++j) drow[j] += g * prow[j];
                drow[tgt[r]] -= g;
            }
        });
        return out;
    }

    // Fused tied-embedding head + masked cross entropy: logits are formed
    // only for rows with mask set (h_row . emb^T), which skips the dominant
    // vocab-sized matmul for every non-target position.
    Tensor<T> tied_logits_masked_nll(Tensor<T> h, Tensor<T> emb, const std::vector<int>& targets,
                                     const std::vector<uint8_t>& mask, CeStats* stats = nullptr) {
        const int n = h.rows(), d = h.cols(), v = emb.rows();
        if (emb.cols() != d) throw std::invalid_argument("tied_logits_masked_nll: emb cols != d");
        if (targets.size() != static_cast<size_t>(n) || mask.size() != static_cast<size_t>(n)) {
            throw std::invalid_argument("tied_logits_masked_nll: targets/mask size != rows");
        }
        std::vector<int> rows;
        for (int i = 0; i < n; ++i) {
            if (mask[static_cast<size_t>(i)]) rows.push_back(i);
        }
        if (rows.empty()) throw std::invalid_argument("tied_logits_masked_nll: no target rows");
        const int m = static_cast<int>(rows.size());
        std::vector<T> hm(static_cast<size_t>(m) * d);
        std::vector<int> tgt(static_cast<size_t>(m));
        for (int r = 0; r < m; ++r) {
            const int row = rows[static_cast<size_t>(r)];
            std::copy_n(h.data() + static_cast<size_t>(row) * d, d, hm.data() + static_cast<size_t>(r) * d);
            const int target = targets[static_cast<size_t>(row)];
            if (target < 0 || target >= v) throw std::invalid_argument("tied_logits_masked_nll: target out of range");
            tgt[static_cast<size_t>(r)] = target;
        }
        std::vector<T> logits(static_cast<size_t>(m) * v);
        kern::gemm_nt(logits.data(), hm.data(), emb.data(), m, v, d, false);
        T loss = T(0);
        for (int r = 0; r < m; ++r) {
            T* srow = logits.data() + static_cast<size_t>(r) * v;
            const T lse = rowm::log_sum_exp_row(srow, v);
            loss += lse - srow[tgt[static_cast<size_t>(r)]];
            if (stats) {
                stats->token_total += 1;
                stats->token_hits += rowm::argmax_row(srow, v) == tgt[static_cast<size_t>(r)] ? 1 : 0;
            }
            for (int j = 0; j < v; ++j) srow[j] = std::exp(srow[j] - lse);  // row becomes probs
        }
        loss /= static_cast<T>(m);
        Tensor<T> out = leaf(1, 1);
        out.data()[0] = loss;
        record_(out, [ih = h.id_, ie = emb.id_, io = out.id_, rows = std::move(rows), tgt = std::move(tgt),
                      probs = std::move(logits), hm = std::move(hm), m, d, v](Tape& t) mutable {
            const T g = t.slot_(io).grad[0] / static_cast<T>(m);
            // probs -> dlogits in place
            for (int r = 0; r < m; ++r) {
                T* prow = probs.data() + static_cast<size_t>(r) * v;
                prow[tgt[static_cast<size_t>(r)]] -= T(1);
                for (int j = 0; j < v; ++j) prow[j] *= g;
            }
            std::vector<T> dhm(static_cast<size_t>(m) * d);
            kern::gemm_nn(dhm.data(), probs.data(), t.slot_(ie).vals, m, d, v, false);
            auto& hs = t.slot_(ih);
            for (int r = 0; r < m; ++r) {
                kern::axpy(hs.grad + static_cast<size_t>(rows[static_cast<size_t>(r)]) * d, T(1),
                           dhm.data() + static_cast<size_t>(r) * d, d);
            }
            kern::gemm_tn(t.slot_(ie).grad, probs.data(), hm.data(), v, d, m, true);
        });
        return out;
    }

    // --- backward -----------------------------------------------------------

    void backward(Tensor<T> loss) {
        if (loss.size() != 1) throw std::logic_error("backward: loss must be scalar");
        if (backward_ran_) throw std::logic_error("backward: tape already consumed; build a new tape");
        backward_ran_ = true;
        slot_(loss.id_).grad[0] = T(1);
        for (size_t i = slots_.size(); i-- > 0;) {
            if (slots_[i].backward) slots_[i].backward(*this);
        }
    }

    bool backward_ran() const { return backward_ran_; }
    size_t node_count() const { return slots_.size(); }

private:
    friend class Tensor<T>;

    struct Slot {
        int rows = 0, cols = 0;
        std::vector<T> vals_store, grad_store;
        T* vals = nullptr;
        T* grad = nullptr;
        std::function<void(Tape&)> backward;
        size_t count() const { return static_cast<size_t>(rows) * cols; }
    };

    Slot& slot_(int id) { return slots_[static_cast<size_t>(id)]; }

    int new_slot_(int rows, int cols) {
        if (rows <= 0 || cols <= 0) throw std::invalid_argument("tensor dims must be positive");
        Slot s;
        s.rows = rows;
        s.cols = cols;
        s.vals_store.assign(static_cast<size_t>(rows) * cols, T(0));
        s.grad_store.assign(static_cast<size_t>(rows) * cols, T(0));
        s.vals = s.vals_store.data();
        s.grad = s.grad_store.data();
        slots_.push_back(std::move(s));
        return static_cast<int>(slots_.size()) - 1;
    }

    void record_(Tensor<T>& out, std::function<void(Tape&)> fn) { slot_(out.id_).backward = std::move(fn); }

    void check_same_shape_(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
        if (a.rows() != b.rows() || a.cols() != b.cols()) {
            throw std::invalid_argument(std::string(op) + ": shape mismatch");
        }
    }

    std::vector<Slot> slots_;
    bool backward_ran_ = false;
};

}  // namespace scratchbench
