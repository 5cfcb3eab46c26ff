#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scratchbench/errors.hpp"

namespace scratchbench {

enum class TokenRole : uint8_t {
    pad,
    structural,    // >>> === ### +
    digit,         // 0..9 (double duty: literal digits and integer mnemonics 1..9)
    bit_letter,    // a b, the bit alphabet of the numeric-mnemonic variant
    constant_mark, // #
    color,
    statement,     // few-shot instruction words and <sep>
    word,          // synthetic word-like mnemonic pool
    integer,       // multi-digit integer mnemonics 10..1024
};

// Fixed global vocabulary. Construction is fully deterministic, and string
// <-> id is a bijection (tested). Mnemonic pools:
//   word pool    4096 synthetic pronounceable words (in-distribution pool)
//   integer pool 1024 tokens "1".."1024"; "1".."9" are the digit tokens
//                (single-token integers), "10".."1024" are dedicated ids
//   color pool   10 color words (cyclic variant default)
class Vocab {
public:
    Vocab();

    int size() const { return static_cast<int>(strs_.size()); }
    const std::string& str(int id) const;
    int id(std::string_view s) const;  // FormatError on unknown token
    TokenRole role(int id) const { return roles_[static_cast<size_t>(id)]; }

    static constexpr int pad_id = 0;
    int begin_id() const { return begin_; }              // ">>>"
    int io_sep_id() const { return io_sep_; }            // "==="
    int section_sep_id() const { return section_sep_; }  // "###"
    int plus_id() const { return plus_; }
    int digit_id(int v) const { return digit0_ + v; }
    int letter_a_id() const { return letter_a_; }
    int letter_b_id() const { return letter_b_; }
    int constant_mark_id() const { return constant_; }
    int example_sep_id() const { return example_sep_; }  // "<sep>"

    std::span<const int> statement_parity() const { return stmt_parity_; }
    std::span<const int> statement_addition() const { return stmt_addition_; }
    std::span<const int> color_pool() const { return colors_; }
    std::span<const int> word_pool() const { return words_; }
    std::span<const int> integer_pool() const { return integers_; }
    int integer_token(int v) const;  // v in 1..1024

private:
    int add_(std::string s, TokenRole role);

    std::vector<std::string> strs_;
    std::vector<TokenRole> roles_;
    std::unordered_map<std::string, int> index_;
    int begin_ = 0, io_sep_ = 0, section_sep_ = 0, plus_ = 0, digit0_ = 0;
    int letter_a_ = 0, letter_b_ = 0, constant_ = 0, example_sep_ = 0;
    std::vector<int> colors_, words_, integers_, stmt_parity_, stmt_addition_;
};

// Process-wide instance (construction is cheap but there is no reason to
// build it more than once).
const Vocab& global_vocab();

}  // namespace scratchbench
