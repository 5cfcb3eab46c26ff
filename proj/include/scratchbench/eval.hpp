#pragma once

// Environment-forced greedy decoding and per-length accuracy curves.
//
// Decoding walks the rendered example from prompt_len: target positions get
// the predictor's greedy choice (which is then fed back into the context),
// non-target positions get the ground-truth token from the example. The
// model therefore never sees gold values of target positions.
//
// Evaluation instances are sampled fresh per (length, index) from a seed
// namespace separate from dataset construction, so results are independent
// of evaluation order and disjoint from training by construction of seeds.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scratchbench/decode.hpp"
#include "scratchbench/tasks.hpp"

namespace scratchbench {

class Predictor {
public:
    virtual ~Predictor() = default;
    virtual void reset() = 0;
    virtual void feed(int token) = 0;
    virtual int predict() = 0;  // greedy next token for the fed prefix
    virtual bool overflowed() const { return false; }
};

class ModelPredictor : public Predictor {
public:
    explicit ModelPredictor(const TransformerWeights<float>& w) : sess_(w) {}
    void reset() override { sess_.reset(); }
    void feed(int token) override { sess_.feed(token); }
    int predict() override { return sess_.predict(); }
    bool overflowed() const override { return sess_.overflowed(); }

private:
    DecodeSession sess_;
};

// Emits the ground-truth token at every position (pipeline self-test).
class OraclePredictor : public Predictor {
public:
    explicit OraclePredictor(std::vector<int> gold) : gold_(std::move(gold)) {}
    void reset() override { fed_ = 0; }
    void feed(int) override { ++fed_; }
    int predict() override { return gold_.at(static_cast<size_t>(fed_)); }

private:
    std::vector<int> gold_;
    size_t fed_ = 0;
};

class ConstantPredictor : public Predictor {
public:
    explicit ConstantPredictor(int token) : token_(token) {}
    void reset() override {}
    void feed(int) override {}
    int predict() override { return token_; }

private:
    int token_;
};

// fresh predictor per example; stubs may capture the example's ground truth
using PredictorFactory = std::function<std::unique_ptr<Predictor>(const FormattedExample&)>;

PredictorFactory model_predictor_factory(const TransformerWeights<float>& w);
PredictorFactory oracle_predictor_factory();
PredictorFactory constant_predictor_factory(int token);

struct EnvDecodeResult {
    std::vector<int> predictions;  // one per target position, in emit order
    bool overflow = false;         // position table exhausted mid-decode
};

EnvDecodeResult env_forced_decode(Predictor& p, const FormattedExample& ex);

// gold tokens at target positions, in order
std::vector<int> target_tokens(const FormattedExample& ex);

// throw std::invalid_argument when prediction count != target count
bool exact_match(const FormattedExample& ex, const std::vector<int>& predictions);
double per_token_accuracy(const FormattedExample& ex, const std::vector<int>& predictions);

struct CurveRow {
    int length = 0;
    int n = 0;
    double exact_match = 0.0;
    double per_token = 0.0;
    int overflow_count = 0;
};

struct LengthAccuracyCurve {
    std::vector<CurveRow> rows;  // sorted by length
};

LengthAccuracyCurve length_curve(const PredictorFactory& make, TaskKind kind, const FormatVariant& v,
                                 const Vocab& vocab, const std::vector<int>& lengths, int n_per_length,
                                 uint64_t seed, int threads = 1);

// scores pre-rendered examples (used for the held-out probe during training);
// returns (exact_match_rate, per_token_rate, overflow_count)
struct ScoreSummary {
    double exact = 0.0;
    double per_token = 0.0;
    int overflow = 0;
};
ScoreSummary score_examples(const PredictorFactory& make, const std::vector<FormattedExample>& examples);

void write_curve_csv(const std::string& path, const LengthAccuracyCurve& curve);
LengthAccuracyCurve read_curve_csv(const std::string& path);

}  // namespace scratchbench
