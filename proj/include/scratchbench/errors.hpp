#pragma once

#include <stdexcept>
#include <string>

namespace scratchbench {

// Bad experiment config / CLI usage input.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed serialized artifact (checkpoint, dataset file, manifest).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss became non-finite; carries the step diagnostics in the message.
struct TrainDivergence : std::runtime_error {
    explicit TrainDivergence(const std::string& msg) : std::runtime_error(msg) {}
};

// A learned-position model was asked to embed beyond max_seq_len during
// training or direct forward calls. (Decoding reports overflow as a result
// instead of throwing.)
struct PositionOverflow : std::runtime_error {
    explicit PositionOverflow(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace scratchbench
