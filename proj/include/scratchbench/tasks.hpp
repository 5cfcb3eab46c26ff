#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "scratchbench/rng.hpp"
#include "scratchbench/vocab.hpp"

namespace scratchbench {

enum class TaskKind { parity, addition };

// Surface formats. Parity families:
//   direct       >>> b1..bn === p_n
//   scratchpad   >>> b1..bn === p1..pn
//   interleaved  >>> b1 p1 b2 p2 ... bn pn
//   mnemonic     >>> M1 b1 .. Mn bn === M1 p1 .. Mn pn   (sampled pool)
//   numeric      same slots, consecutive integer tokens 1..n; bits spelled a/b
//   constant     every slot is "#"
//   nonaligned   input slots M1..Mn, output slots M(n+1)..M(2n)
//   cyclic       slot i is cycle[(i-1) mod cycle_len]
//   interval     a mnemonic before bits 1, k+1, 2k+1, ...
// Addition families (per-place scratchpad; mnemonics flag toggles the
// anchor tokens):
//   scratchpad   digit-aligned place mnemonics + shared trailing carry slot
//   zero_padded  operands padded with leading zeros to a common width
//   nonaligned   one fresh mnemonic per digit occurrence, no trailing slots
enum class FormatFamily {
    direct,
    scratchpad,
    interleaved,
    mnemonic,
    numeric,
    constant,
    nonaligned,
    cyclic,
    interval,
    zero_padded,
};

enum class MnemonicPool { words, integers, colors };

struct FormatVariant {
    FormatFamily family = FormatFamily::scratchpad;
    bool env_forced = false;
    int interval_k = 2;                   // interval family
    MnemonicPool pool = MnemonicPool::words;
    bool mnemonics = true;                // addition families only
    std::vector<int> cycle;               // cyclic family; empty = vocab color pool
};

const char* family_name(FormatFamily f);
FormatFamily parse_family(std::string_view s);
const char* pool_name(MnemonicPool p);
MnemonicPool parse_pool(std::string_view s);
const char* task_name(TaskKind k);
TaskKind parse_task(std::string_view s);
void validate_variant(TaskKind kind, const FormatVariant& v);

// A sampled problem plus the mnemonics drawn for it. bits hold 0/1; digits
// are most-significant first with no leading zeros (a lone zero allowed).
struct TaskInstance {
    TaskKind kind = TaskKind::parity;
    std::vector<int> bits;
    std::vector<int> a_digits, b_digits;
    std::vector<int> mnemonic_ids;
};

// Rendered token sequence. target_mask marks positions the model must
// produce during evaluation; everything else is placed by the environment.
// prompt_len counts the tokens before the first non-prompt position.
struct FormattedExample {
    std::vector<int> tokens;
    std::vector<uint8_t> target_mask;
    int prompt_len = 0;
    int length = 0;  // bits (parity) / longer-operand digits (addition)
};

// running XOR prefix: p1 = b1, p_i = p_{i-1} xor b_i
std::vector<int> parity_oracle(const std::vector<int>& bits);

// Column addition with an always-present carry place. reversed_sum lists the
// digit of each place value from units upward, length max(|a|,|b|)+1; the
// final answer is its exact reversal (leading zero kept).
struct AdditionResult {
    std::vector<int> reversed_sum;
    std::vector<int> final_sum;
};
AdditionResult addition_oracle(const std::vector<int>& a_digits, const std::vector<int>& b_digits);

// Problem sampling. Parity: length uniform bits. Addition: the longer
// operand has `length` digits, the other 1..length (side random).
TaskInstance sample_instance(TaskKind kind, int length, Rng& rng);

// Number of distinct mnemonics a variant consumes for this instance.
int mnemonics_needed(TaskKind kind, const FormatVariant& v, const TaskInstance& inst);

// Draws `count` distinct tokens from a pool.
std::vector<int> sample_mnemonics(const Vocab& vocab, MnemonicPool pool, int count, Rng& rng);

// Fills inst.mnemonic_ids as the variant requires (no-op for variants that
// use none or construct them positionally).
void assign_mnemonics(TaskInstance& inst, const FormatVariant& v, const Vocab& vocab, Rng& rng);

FormattedExample render_parity(const TaskInstance& inst, const FormatVariant& v, const Vocab& vocab);
FormattedExample render_addition(const TaskInstance& inst, const FormatVariant& v, const Vocab& vocab);
FormattedExample render_example(const TaskInstance& inst, const FormatVariant& v, const Vocab& vocab);

// Closed-form token count of a rendered parity example.
int parity_token_count(const FormatVariant& v, int n);

// Inverse of the renderers, used when loading serialized examples: infers
// prompt_len and the task length from the token sequence alone.
int infer_prompt_len(const Vocab& vocab, const std::vector<int>& tokens);
int infer_length(TaskKind kind, const FormatVariant& v, const Vocab& vocab, const std::vector<int>& tokens);

// Few-shot prompt: instruction words, then demos separated by <sep>, then
// the query; only the query's target positions stay marked.
FormattedExample render_fewshot_prompt(const Vocab& vocab, TaskKind kind,
                                       const std::vector<FormattedExample>& demos,
                                       const FormattedExample& query);

}  // namespace scratchbench
