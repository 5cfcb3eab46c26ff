#include "scratchbench/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "scratchbench/rng.hpp"

namespace scratchbench {

PredictorFactory model_predictor_factory(const TransformerWeights<float>& w) {
    return [&w](const FormattedExample&) { return std::make_unique<ModelPredictor>(w); };
}

PredictorFactory oracle_predictor_factory() {
    return [](const FormattedExample& ex) { return std::make_unique<OraclePredictor>(ex.tokens); };
}

PredictorFactory constant_predictor_factory(int token) {
    return [token](const FormattedExample&) { return std::make_unique<ConstantPredictor>(token); };
}

EnvDecodeResult env_forced_decode(Predictor& p, const FormattedExample& ex) {
    EnvDecodeResult res;
    p.reset();
    const int total = static_cast<int>(ex.tokens.size());
    for (int j = 0; j < ex.prompt_len; ++j) p.feed(ex.tokens[static_cast<size_t>(j)]);
    for (int j = ex.prompt_len; j < total; ++j) {
        if (ex.target_mask[static_cast<size_t>(j)]) {
            if (p.overflowed()) {
                res.overflow = true;
                return res;
            }
            const int pred = p.predict();
            res.predictions.push_back(pred);
            p.feed(pred);
        } else {
            p.feed(ex.tokens[static_cast<size_t>(j)]);
        }
    }
    if (p.overflowed()) res.overflow = true;
    return res;
}

std::vector<int> target_tokens(const FormattedExample& ex) {
    std::vector<int> gold;
    for (size_t j = 0; j < ex.tokens.size(); ++j) {
        if (ex.target_mask[j]) gold.push_back(ex.tokens[j]);
    }
    return gold;
}

namespace {

void check_count(const FormattedExample& ex, const std::vector<int>& predictions) {
    size_t n_targets = 0;
    for (const auto m : ex.target_mask) n_targets += m ? 1 : 0;
    if (predictions.size() != n_targets) {
        throw std::invalid_argument("scoring: " + std::to_string(predictions.size()) + " predictions for " +
                                    std::to_string(n_targets) + " targets");
    }
}

}  // namespace

bool exact_match(const FormattedExample& ex, const std::vector<int>& predictions) {
    check_count(ex, predictions);
    return predictions == target_tokens(ex);
}

double per_token_accuracy(const FormattedExample& ex, const std::vector<int>& predictions) {
    check_count(ex, predictions);
    const auto gold = target_tokens(ex);
    if (gold.empty()) return 1.0;
    size_t hit = 0;
    for (size_t i = 0; i < gold.size(); ++i) hit += predictions[i] == gold[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

namespace {

struct ExampleScore {
    bool exact = false;
    double per_token = 0.0;
    bool overflow = false;
};

ExampleScore score_one(const PredictorFactory& make, const FormattedExample& ex) {
    ExampleScore s;
    auto p = make(ex);
    const EnvDecodeResult res = env_forced_decode(*p, ex);
    const auto gold = target_tokens(ex);
    if (res.overflow) {
        // unpredicted targets count as wrong; exact match impossible
        s.overflow = true;
        size_t hit = 0;
        for (size_t i = 0; i < res.predictions.size() && i < gold.size(); ++i) {
            hit += res.predictions[i] == gold[i] ? 1 : 0;
        }
        s.per_token = gold.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(gold.size());
        return s;
    }
    s.exact = exact_match(ex, res.predictions);
    s.per_token = per_token_accuracy(ex, res.predictions);
    return s;
}

std::vector<ExampleScore> score_all(const PredictorFactory& make, const std::vector<FormattedExample>& examples,
                                    int threads) {
    std::vector<ExampleScore> scores(examples.size());
    if (threads <= 1 || examples.size() < 2) {
        for (size_t i = 0; i < examples.size(); ++i) scores[i] = score_one(make, examples[i]);
        return scores;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= examples.size()) return;
            scores[i] = score_one(make, examples[i]);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(threads, static_cast<int>(examples.size()));
    pool.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return scores;
}

}  // namespace

LengthAccuracyCurve length_curve(const PredictorFactory& make, TaskKind kind, const FormatVariant& v,
                                 const Vocab& vocab, const std::vector<int>& lengths, int n_per_length,
                                 uint64_t seed, int threads) {
    if (lengths.empty()) throw std::invalid_argument("length_curve: empty length list");
    if (n_per_length < 1) throw std::invalid_argument("length_curve: n_per_length must be >= 1");
    std::vector<int> sorted = lengths;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<FormattedExample> examples;
    examples.reserve(sorted.size() * static_cast<size_t>(n_per_length));
    for (const int length : sorted) {
        for (int i = 0; i < n_per_length; ++i) {
            Rng rng(derive_seed(seed, "eval-instance", static_cast<uint64_t>(length), static_cast<uint64_t>(i)));
            TaskInstance inst = sample_instance(kind, length, rng);
            assign_mnemonics(inst, v, vocab, rng);
            examples.push_back(render_example(inst, v, vocab));
        }
    }
    const auto scores = score_all(make, examples, threads);

    LengthAccuracyCurve curve;
    for (size_t li = 0; li < sorted.size(); ++li) {
        CurveRow row;
        row.length = sorted[li];
        row.n = n_per_length;
        for (int i = 0; i < n_per_length; ++i) {
            const auto& s = scores[li * static_cast<size_t>(n_per_length) + static_cast<size_t>(i)];
            row.exact_match += s.exact ? 1.0 : 0.0;
            row.per_token += s.per_token;
            row.overflow_count += s.overflow ? 1 : 0;
        }
        row.exact_match /= n_per_length;
        row.per_token /= n_per_length;
        curve.rows.push_back(row);
    }
    return curve;
}

ScoreSummary score_examples(const PredictorFactory& make, const std::vector<FormattedExample>& examples) {
    ScoreSummary sum;
    if (examples.empty()) return sum;
    const auto scores = score_all(make, examples, 1);
    for (const auto& s : scores) {
        sum.exact += s.exact ? 1.0 : 0.0;
        sum.per_token += s.per_token;
        sum.overflow += s.overflow ? 1 : 0;
    }
    sum.exact /= static_cast<double>(examples.size());
    sum.per_token /= static_cast<double>(examples.size());
    return sum;
}

void write_curve_csv(const std::string& path, const LengthAccuracyCurve& curve) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_curve_csv: cannot open " + path);
    f << "length,n,exact_match,per_token,overflow_count\n";
    char buf[128];
    for (const auto& r : curve.rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%d\n", r.length, r.n, r.exact_match, r.per_token,
                      r.overflow_count);
        f << buf;
    }
    if (!f) throw std::runtime_error("write_curve_csv: write failed for " + path);
}

LengthAccuracyCurve read_curve_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_curve_csv: cannot open " + path);
    LengthAccuracyCurve curve;
    std::string line;
    if (!std::getline(f, line)) throw FormatError("read_curve_csv: empty file " + path);
    if (line != "length,n,exact_match,per_token,overflow_count") {
        throw FormatError("read_curve_csv: unexpected header in " + path);
    }
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        CurveRow r;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%d", &r.length, &r.n, &r.exact_match, &r.per_token,
                        &r.overflow_count) != 5) {
            throw FormatError("read_curve_csv: " + path + ":" + std::to_string(lineno) + ": bad row");
        }
        curve.rows.push_back(r);
    }
    return curve;
}

}  // namespace scratchbench
