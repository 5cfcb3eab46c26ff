#pragma once

#include <string>

#include "scratchbench/model.hpp"
#include "scratchbench/optim.hpp"

namespace scratchbench {

// Binary checkpoint, version 1, little-endian:
//   "SBCK" u32-version
//   i32 n_layers n_heads d_model d_ff vocab_size max_seq_len
//   u8 pos_scheme, f64 rope_theta, f64 ln_eps, u64 init_seed
//   u8 has_opt, u64 adam_t
//   u32 n_tensors
//   f32[] weights per tensor in canonical registration order
//   if has_opt: f32[] adam_m then f32[] adam_v per tensor, same order
// Truncated, oversized, or inconsistent files raise FormatError. Writing is
// staged through path+".tmp" and renamed into place.

struct CheckpointData {
    TransformerWeights<float> weights;
    bool has_opt = false;
    AdamState<float> opt;
};

void save_checkpoint(const std::string& path, const TransformerWeights<float>& w,
                     const AdamState<float>* opt = nullptr);

CheckpointData load_checkpoint(const std::string& path);

}  // namespace scratchbench
