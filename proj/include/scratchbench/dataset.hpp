#pragma once

// Dataset construction and persistence.
//
// build_dataset draws, per length L in [min_length, max_length], a held-out
// eval set of `holdout_per_length` distinct instances plus a train set of
// `per_length - holdout_per_length` instances disjoint from eval (train may
// repeat instances; eval may not). Each example gets fresh mnemonics. Every
// example's sampling is driven by a seed derived from (seed, length, index),
// so regeneration is reproducible and order-independent.
//
// File format: one example per line, space-separated token strings, then a
// tab, then the target mask as a contiguous 0/1 string.
// The manifest is flat key=value text recording task, variant, seed, counts,
// pool identifiers, and FNV-1a content hashes of the split files.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scratchbench/tasks.hpp"

namespace scratchbench {

struct DatasetSpec {
    TaskKind kind = TaskKind::parity;
    FormatVariant variant;
    int min_length = 10;
    int max_length = 20;
    int per_length = 0;          // train + holdout, per length
    int holdout_per_length = 0;  // reserved for eval, per length
    uint64_t seed = 0;
};

struct DatasetSplits {
    std::vector<FormattedExample> train;
    std::vector<FormattedExample> eval;
};

// number of distinct instances at a given length (saturating; parity 2^L,
// addition counts ordered operand pairs with max digit count == L)
long double instance_space(TaskKind kind, int length);

// throws ConfigError when the requested counts cannot be met
DatasetSplits build_dataset(const DatasetSpec& spec, const Vocab& vocab);

void write_examples(const std::string& path, const std::vector<FormattedExample>& examples, const Vocab& vocab);
std::vector<FormattedExample> load_examples(const std::string& path, TaskKind kind, const FormatVariant& variant,
                                            const Vocab& vocab);

uint64_t fnv1a_file(const std::string& path);  // throws std::runtime_error on I/O failure

std::string variant_manifest_block(TaskKind kind, const FormatVariant& v, const Vocab& vocab);
void write_manifest(const std::string& path, const DatasetSpec& spec, const DatasetSplits& splits,
                    const std::string& train_file, const std::string& eval_file, const Vocab& vocab);
std::map<std::string, std::string> read_manifest(const std::string& path);

// writes train.txt, eval.txt, manifest.txt under out_dir (created if needed)
void generate_dataset_files(const DatasetSpec& spec, const std::string& out_dir, const Vocab& vocab);

}  // namespace scratchbench
