#pragma once

// Training harness: batch assembly with loss masking, Adam with linear
// warmup, periodic held-out evaluation, checkpointing, and run-directory
// persistence (metrics.csv, checkpoints/step-N.ckpt, log.txt).
//
// Determinism contract: the batch drawn at step s depends only on
// (seed, s), and evaluation never mutates weights, so resuming from the
// step-N checkpoint reproduces an unbroken run bitwise.

#include <cstdint>
#include <string>
#include <vector>

#include "scratchbench/model.hpp"
#include "scratchbench/optim.hpp"
#include "scratchbench/tasks.hpp"

namespace scratchbench {

struct TrainConfig {
    std::string preset = "desk";  // paper | desk | custom, documentation tag
    double base_lr = 3e-4;
    int warmup_steps = 200;
    int epochs = 1;
    int steps_per_epoch = 3000;
    int batch_size = 64;
    uint64_t seed = 1;
    int eval_every = 500;
    int probe_examples = 200;  // held-out probe size, round-robin over lengths
    int checkpoint_every = 0;  // 0: final checkpoint only
    double clip_norm = 1.0;    // global gradient norm; 0 disables
    bool save_optimizer = true;

    int64_t total_steps() const { return static_cast<int64_t>(epochs) * steps_per_epoch; }
};

struct MetricRow {
    int64_t step = 0;
    std::string split;  // "train" | "heldout"
    int length = 0;     // 0 = aggregate over lengths
    double accuracy = 0.0;
    double loss = 0.0;
};

struct RunRecord {
    std::vector<MetricRow> rows;
    std::vector<std::string> checkpoint_paths;
    std::string final_checkpoint;
    int64_t steps_run = 0;
    double wall_seconds = 0.0;
};

struct Batch {
    std::vector<int> tokens;       // batch × width, right-padded
    std::vector<int> lengths;      // true lengths
    std::vector<int> targets;      // logits-row space: targets[r] labels row r
    std::vector<uint8_t> loss_mask;
    int batch = 0;
    int width = 0;

    BatchView view() const { return BatchView{tokens.data(), lengths.data(), batch, width}; }
};

// Pads to the batch max length and shifts next-token labels into logits-row
// space (row j is labeled by token j+1 when that position is a target).
// Throws PositionOverflow when an example exceeds max_len (if max_len > 0).
Batch assemble_batch(const std::vector<const FormattedExample*>& examples, int pad_token, int max_len);

// Uniform with-replacement draw of batch indices for a given step (1-based).
std::vector<size_t> sample_batch_indices(uint64_t seed, int64_t step, size_t pool_size, int batch_size);

// Runs (or resumes, when run_dir holds checkpoints) a training run.
// Writes metrics.csv (append-only, flushed per eval), checkpoints, log.txt.
// Throws TrainDivergence on non-finite loss, after flushing metrics.
RunRecord train_run(const std::string& run_dir, const TrainConfig& tc, const ModelConfig& mc,
                    const std::vector<FormattedExample>& train_split,
                    const std::vector<FormattedExample>& eval_split);

// Round-robin over lengths until `count` examples are collected.
std::vector<FormattedExample> probe_subset(const std::vector<FormattedExample>& eval_split, int count);

std::vector<MetricRow> read_metrics_csv(const std::string& path);

}  // namespace scratchbench
