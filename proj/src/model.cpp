#include "scratchbench/model.hpp"

namespace scratchbench {

void validate_model_config(const ModelConfig& cfg) {
    if (cfg.n_layers <= 0) throw ConfigError("model: n_layers must be positive");
    if (cfg.n_heads <= 0) throw ConfigError("model: n_heads must be positive");
    if (cfg.d_model <= 0 || cfg.d_model % cfg.n_heads != 0) {
        throw ConfigError("model: d_model must be a positive multiple of n_heads");
    }
    if (cfg.pos == PosScheme::rotary && (cfg.d_model / cfg.n_heads) % 2 != 0) {
        throw ConfigError("model: rotary needs an even head dimension");
    }
    if (cfg.d_ff <= 0) throw ConfigError("model: d_ff must be positive");
    if (cfg.vocab_size <= 0) throw ConfigError("model: vocab_size must be positive");
    if (cfg.max_seq_len <= 0) throw ConfigError("model: max_seq_len must be positive");
    if (cfg.rope_theta <= 0.0) throw ConfigError("model: rope_theta must be positive");
    if (cfg.ln_eps <= 0.0) throw ConfigError("model: ln_eps must be positive");
}

size_t expected_param_count(const ModelConfig& cfg) {
    const size_t d = static_cast<size_t>(cfg.d_model);
    size_t n = static_cast<size_t>(cfg.vocab_size) * d;
    if (cfg.pos == PosScheme::learned) n += static_cast<size_t>(cfg.max_seq_len) * d;
    const size_t per_layer = 2 * d          // ln1
                             + 4 * d * d    // wq wk wv wo
                             + 2 * d        // ln2
                             + 2 * d * static_cast<size_t>(cfg.d_ff);  // ff1 ff2
    n += static_cast<size_t>(cfg.n_layers) * per_layer;
    n += 2 * d;  // final ln
    return n;
}

}  // namespace scratchbench
