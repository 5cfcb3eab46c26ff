#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "scratchbench/positional.hpp"
#include "scratchbench/rng.hpp"
#include "scratchbench/tensor.hpp"

using namespace scratchbench;

namespace {

struct Mat {
    int rows, cols;
    std::vector<double> vals;
};

Mat rand_mat(Rng& rng, int r, int c, double scl = 1.0) {
    Mat m{r, c, {}};
    m.vals.resize(static_cast<size_t>(r) * c);
    for (auto& x : m.vals) x = rng.gaussian() * scl;
    return m;
}

using Build = std::function<Tensor<double>(Tape<double>&, std::vector<Tensor<double>>&)>;

double eval_loss(const std::vector<Mat>& inputs, const Build& build) {
    Tape<double> tape;
    std::vector<Tensor<double>> xs;
    xs.reserve(inputs.size());
    for (const auto& m : inputs) xs.push_back(tape.leaf(m.vals, m.rows, m.cols));
    return build(tape, xs).scalar();
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}); }

// analytic gradient of every input element vs central differences
void check_grads(const std::vector<Mat>& inputs, const Build& build, double tol = 1e-6) {
    Tape<double> tape;
    std::vector<Tensor<double>> xs;
    xs.reserve(inputs.size());
    for (const auto& m : inputs) xs.push_back(tape.leaf(m.vals, m.rows, m.cols));
    auto loss = build(tape, xs);
    tape.backward(loss);

    const double h = 1e-5;
    for (size_t mi = 0; mi < inputs.size(); ++mi) {
        for (size_t j = 0; j < inputs[mi].vals.size(); ++j) {
            auto plus = inputs;
            plus[mi].vals[j] += h;
            auto minus = inputs;
            minus[mi].vals[j] -= h;
            const double num = (eval_loss(plus, build) - eval_loss(minus, build)) / (2 * h);
            const double ana = xs[mi].grad_data()[j];
            CAPTURE(mi);
            CAPTURE(j);
            REQUIRE(rel_err(ana, num) < tol);
        }
    }
}

// funnel a non-scalar op output into a scalar with rich upstream gradients
Build weighted_sum(std::function<Tensor<double>(Tape<double>&, std::vector<Tensor<double>>&)> op,
                   std::vector<double> w) {
    return [op = std::move(op), w = std::move(w)](Tape<double>& t, std::vector<Tensor<double>>& xs) {
        auto out = op(t, xs);
        auto ww = t.leaf(w, out.rows(), out.cols());
        return t.sum_all(t.mul_elem(out, ww));
    };
}

std::vector<double> rand_weights(Rng& rng, int n) {
    std::vector<double> w(static_cast<size_t>(n));
    for (auto& x : w) x = rng.gaussian();
    return w;
}

}  // namespace

TEST_CASE("elementwise ops differentiate correctly") {
    Rng rng(301);
    const auto a = rand_mat(rng, 3, 4);
    const auto b = rand_mat(rng, 3, 4);
    const auto w = rand_weights(rng, 12);

    check_grads({a, b}, weighted_sum([](Tape<double>& t, auto& xs) { return t.add(xs[0], xs[1]); }, w));
    check_grads({a, b}, weighted_sum([](Tape<double>& t, auto& xs) { return t.sub(xs[0], xs[1]); }, w));
    check_grads({a, b}, weighted_sum([](Tape<double>& t, auto& xs) { return t.mul_elem(xs[0], xs[1]); }, w));
    check_grads({a}, weighted_sum([](Tape<double>& t, auto& xs) { return t.scale(xs[0], -1.7); }, w));
    check_grads({a}, weighted_sum([](Tape<double>& t, auto& xs) { return t.gelu(xs[0]); }, w));
    check_grads({a}, [](Tape<double>& t, auto& xs) { return t.sum_all(xs[0]); });
    check_grads({a}, [](Tape<double>& t, auto& xs) { return t.select(xs[0], 2, 1); });
}

TEST_CASE("gelu matches the exact erf form") {
    // erf-based gelu, not the tanh approximation
    Tape<double> t;
    auto x = t.leaf({0.5, -1.25, 3.0, 0.0}, 1, 4);
    auto y = t.gelu(x);
    for (int j = 0; j < 4; ++j) {
        const double v = x.at(0, j);
        const double want = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
        CHECK(y.at(0, j) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("matmul layouts differentiate correctly") {
    Rng rng(303);
    const auto a = rand_mat(rng, 3, 5);
    const auto b = rand_mat(rng, 5, 4);
    const auto bt = rand_mat(rng, 4, 5);
    const auto w = rand_weights(rng, 12);

    check_grads({a, b}, weighted_sum([](Tape<double>& t, auto& xs) { return t.matmul(xs[0], xs[1]); }, w));
    check_grads({a, bt}, weighted_sum([](Tape<double>& t, auto& xs) { return t.matmul_nt(xs[0], xs[1]); }, w));
}

TEST_CASE("layer_norm differentiates through x, gamma and beta") {
    Rng rng(305);
    const auto x = rand_mat(rng, 4, 6);
    auto gamma = rand_mat(rng, 1, 6);
    for (auto& g : gamma.vals) g += 1.0;  // keep away from degenerate zero scale
    const auto beta = rand_mat(rng, 1, 6);
    const auto w = rand_weights(rng, 24);
    check_grads({x, gamma, beta},
                weighted_sum([](Tape<double>& t, auto& xs) { return t.layer_norm(xs[0], xs[1], xs[2], 1e-5); }, w));
}

TEST_CASE("softmax_rows differentiates correctly and rows sum to one") {
    Rng rng(307);
    const auto x = rand_mat(rng, 3, 7);
    const auto w = rand_weights(rng, 21);
    check_grads({x}, weighted_sum([](Tape<double>& t, auto& xs) { return t.softmax_rows(xs[0]); }, w));

    Tape<double> t;
    auto probs = t.softmax_rows(t.leaf(x.vals, x.rows, x.cols));
    for (int r = 0; r < 3; ++r) {
        double s = 0;
        for (int j = 0; j < 7; ++j) s += probs.at(r, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("embed differentiates into token and position tables") {
    Rng rng(309);
    const auto tok = rand_mat(rng, 6, 4);
    const auto pos = rand_mat(rng, 5, 4);
    const std::vector<int> tokens = {2, 0, 2, 5};
    const std::vector<int> positions = {0, 1, 2, 3};
    const auto w = rand_weights(rng, 16);
    check_grads({tok, pos},
                weighted_sum(
                    [&](Tape<double>& t, auto& xs) {
                        return t.embed(xs[0], xs[1], true, tokens, positions);
                    },
                    w));

    // repeated token 2 accumulates both rows; untouched rows stay zero
    Tape<double> t;
    auto tt = t.leaf(tok.vals, tok.rows, tok.cols);
    auto pt = t.leaf(pos.vals, pos.rows, pos.cols);
    auto out = t.embed(tt, pt, true, tokens, positions);
    t.backward(t.sum_all(out));
    for (int j = 0; j < 4; ++j) {
        CHECK(tt.grad_at(2, j) == doctest::Approx(2.0));
        CHECK(tt.grad_at(1, j) == 0.0);
        CHECK(tt.grad_at(3, j) == 0.0);
        CHECK(pt.grad_at(4, j) == 0.0);
    }
}

TEST_CASE("embed rejects positions beyond the learned table") {
    Tape<double> t;
    auto tok = t.leaf(std::vector<double>(8, 0.1), 2, 4);
    auto pos = t.leaf(std::vector<double>(12, 0.1), 3, 4);
    CHECK_THROWS_AS(t.embed(tok, pos, true, {0, 1}, {1, 3}), PositionOverflow);
    CHECK_NOTHROW(t.embed(tok, pos, false, {0, 1}, {1, 3}));
}

TEST_CASE("causal attention differentiates under every positional scheme") {
    Rng rng(311);
    const int n = 7, d = 4, heads = 2;
    const auto q = rand_mat(rng, n, d);
    const auto k = rand_mat(rng, n, d);
    const auto v = rand_mat(rng, n, d);
    const auto w = rand_weights(rng, n * d);

    for (const auto scheme : {PosScheme::none, PosScheme::rotary, PosScheme::alibi}) {
        CAPTURE(static_cast<int>(scheme));
        AttnSpec<double> spec;
        spec.n_heads = heads;
        spec.scale = 1.0 / std::sqrt(2.0);
        spec.scheme = scheme;
        spec.alibi_slopes = linear_bias_slopes(heads);
        spec.offsets = {0, 3};  // two packed examples: rows 0..2 and 3..6
        spec.lengths = {3, 4};
        check_grads({q, k, v},
                    weighted_sum(
                        [spec](Tape<double>& t, auto& xs) {
                            return t.causal_attention(xs[0], xs[1], xs[2], spec);
                        },
                        w),
                    5e-6);
    }
}

TEST_CASE("attention blocks do not mix packed examples") {
    Rng rng(313);
    const int n = 6, d = 4;
    auto q = rand_mat(rng, n, d);
    auto k = rand_mat(rng, n, d);
    auto v = rand_mat(rng, n, d);
    AttnSpec<double> spec;
    spec.n_heads = 2;
    spec.scale = 0.7;
    spec.offsets = {0, 3};
    spec.lengths = {3, 3};

    auto run = [&](const Mat& vm) {
        Tape<double> t;
        auto out = t.causal_attention(t.leaf(q.vals, n, d), t.leaf(k.vals, n, d), t.leaf(vm.vals, n, d), spec);
        return std::vector<double>(out.data(), out.data() + out.size());
    };
    const auto base = run(v);
    auto v2 = v;
    for (int j = 0; j < d; ++j) v2.vals[static_cast<size_t>(4) * d + j] += 3.0;  // second example only
    const auto bumped = run(v2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < d; ++j) REQUIRE(bumped[static_cast<size_t>(i) * d + j] == base[static_cast<size_t>(i) * d + j]);
    bool changed = false;
    for (int i = 4; i < 6; ++i)
        for (int j = 0; j < d; ++j) changed |= bumped[static_cast<size_t>(i) * d + j] != base[static_cast<size_t>(i) * d + j];
    CHECK(changed);
}

TEST_CASE("masked cross entropy differentiates and ignores unmasked rows") {
    Rng rng(317);
    const auto logits = rand_mat(rng, 5, 6);
    const std::vector<int> targets = {1, 0, 3, 5, 2};
    const std::vector<uint8_t> mask = {1, 0, 1, 0, 1};
    check_grads({logits}, [&](Tape<double>& t, auto& xs) {
        return t.masked_cross_entropy(xs[0], targets, mask, nullptr);
    });

    Tape<double> t;
    auto lg = t.leaf(logits.vals, 5, 6);
    CeStats stats;
    auto loss = t.masked_cross_entropy(lg, targets, mask, &stats);
    t.backward(loss);
    CHECK(stats.token_total == 3);
    for (int j = 0; j < 6; ++j) {
        REQUIRE(lg.grad_at(1, j) == 0.0);  // exactly, not approximately
        REQUIRE(lg.grad_at(3, j) == 0.0);
    }
    CHECK(std::abs(lg.grad_at(0, 0)) + std::abs(lg.grad_at(0, 1)) > 0.0);
}

TEST_CASE("masked cross entropy requires at least one target row") {
    Tape<double> t;
    auto lg = t.leaf(std::vector<double>(12, 0.1), 3, 4);
    CHECK_THROWS_AS(t.masked_cross_entropy(lg, {0, 1, 2}, {0, 0, 0}, nullptr), std::invalid_argument);
}

TEST_CASE("fused tied-logits nll matches the explicit composition") {
    Rng rng(319);
    const int n = 5, d = 4, vsz = 7;
    const auto hm = rand_mat(rng, n, d);
    const auto emb = rand_mat(rng, vsz, d);
    const std::vector<int> targets = {1, 6, 3, 0, 2};
    const std::vector<uint8_t> mask = {1, 1, 0, 1, 0};

    // same loss value as matmul_nt + masked_cross_entropy
    Tape<double> ta;
    CeStats sa;
    auto la = ta.tied_logits_masked_nll(ta.leaf(hm.vals, n, d), ta.leaf(emb.vals, vsz, d), targets, mask, &sa);
    Tape<double> tb;
    CeStats sb;
    auto logits = tb.matmul_nt(tb.leaf(hm.vals, n, d), tb.leaf(emb.vals, vsz, d));
    auto lb = tb.masked_cross_entropy(logits, targets, mask, &sb);
    CHECK(la.scalar() == doctest::Approx(lb.scalar()).epsilon(1e-12));
    CHECK(sa.token_hits == sb.token_hits);
    CHECK(sa.token_total == 3);

    check_grads({hm, emb}, [&](Tape<double>& t, auto& xs) {
        return t.tied_logits_masked_nll(xs[0], xs[1], targets, mask, nullptr);
    });

    // h rows outside the mask keep exactly zero gradient
    Tape<double> tc;
    auto hh = tc.leaf(hm.vals, n, d);
    auto ee = tc.leaf(emb.vals, vsz, d);
    tc.backward(tc.tied_logits_masked_nll(hh, ee, targets, mask, nullptr));
    for (int j = 0; j < d; ++j) {
        REQUIRE(hh.grad_at(2, j) == 0.0);
        REQUIRE(hh.grad_at(4, j) == 0.0);
    }
}

TEST_CASE("param leaves write gradients into external storage") {
    std::vector<double> vals = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> grads(4, 0.0);
    Tape<double> t;
    auto p = t.param(vals.data(), grads.data(), 2, 2);
    t.backward(t.sum_all(t.mul_elem(p, p)));
    for (int i = 0; i < 4; ++i) CHECK(grads[static_cast<size_t>(i)] == doctest::Approx(2.0 * vals[static_cast<size_t>(i)]));
}

TEST_CASE("a tape is single shot") {
    Tape<double> t;
    auto x = t.leaf({1.0, 2.0}, 1, 2);
    auto loss = t.sum_all(x);
    CHECK_FALSE(t.backward_ran());
    t.backward(loss);
    CHECK(t.backward_ran());
    CHECK_THROWS_AS(t.backward(loss), std::logic_error);
}

TEST_CASE("gradients accumulate across fan-out") {
    // y = sum(x) + sum(x .* x): dy/dx = 1 + 2x through two paths
    Tape<double> t;
    auto x = t.leaf({0.5, -1.0, 2.0}, 1, 3);
    auto loss = t.add(t.sum_all(x), t.sum_all(t.mul_elem(x, x)));
    t.backward(loss);
    CHECK(x.grad_at(0, 0) == doctest::Approx(1.0 + 2.0 * 0.5));
    CHECK(x.grad_at(0, 1) == doctest::Approx(1.0 - 2.0));
    CHECK(x.grad_at(0, 2) == doctest::Approx(1.0 + 4.0));
}
