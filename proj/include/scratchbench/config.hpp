#pragma once

// Experiment configuration: flat dotted-key `key=value` text with '#'
// comments. Unknown keys are rejected. A parsed config resolves every
// derived field (vocab size, seeds, preset expansion), and
// canonical_snapshot emits the fully resolved document in a fixed key
// order, so snapshot -> parse -> snapshot is a fixed point.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scratchbench/dataset.hpp"
#include "scratchbench/model.hpp"
#include "scratchbench/train.hpp"

namespace scratchbench {

struct ExperimentConfig {
    uint64_t seed = 1;
    ModelConfig model;
    TaskKind task = TaskKind::parity;
    FormatVariant variant;
    int train_min_length = 10;
    int train_max_length = 20;
    int per_length = 1200;
    int holdout_per_length = 200;
    TrainConfig train;
    std::vector<int> eval_lengths;  // default 1..60 parity, 1..14 addition
    int eval_n_per_length = 100;
    MnemonicPool eval_pool = MnemonicPool::words;  // may differ for OOD evals
    int eval_threads = 1;
    bool attribution_enabled = false;
    int attribution_length = 40;

    DatasetSpec dataset_spec() const {
        return DatasetSpec{task, variant, train_min_length, train_max_length, per_length, holdout_per_length, seed};
    }
    FormatVariant eval_variant() const {
        FormatVariant v = variant;
        v.pool = eval_pool;
        return v;
    }
};

// "1..60" | "5" | "1..20,30,40" -> expanded ascending list
std::vector<int> parse_length_list(const std::string& text);
std::string format_length_list(const std::vector<int>& lengths);

// presets fill train hyperparameters; explicit keys override afterwards.
// "paper" mirrors the published protocol (from-scratch epochs, i.e. doubled)
// and picks the batch size by task; "desk" is the frozen small-model budget.
void apply_preset(TrainConfig& tc, const std::string& preset, TaskKind task);

ExperimentConfig parse_experiment_config(const std::string& text, const Vocab& vocab);
ExperimentConfig load_experiment_config(const std::string& path, const Vocab& vocab);

// `overrides` entries are "key=value" lines applied on top of the document
ExperimentConfig parse_experiment_config(const std::string& text, const Vocab& vocab,
                                         const std::vector<std::string>& overrides);

std::string canonical_snapshot(const ExperimentConfig& cfg, const Vocab& vocab);

}  // namespace scratchbench
