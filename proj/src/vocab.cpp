#include "scratchbench/vocab.hpp"

#include <array>

namespace scratchbench {

int Vocab::add_(std::string s, TokenRole role) {
    auto [it, fresh] = index_.emplace(s, static_cast<int>(strs_.size()));
    if (!fresh) throw std::logic_error("vocab: duplicate token string: " + s);
    strs_.push_back(std::move(s));
    roles_.push_back(role);
    return it->second;
}

Vocab::Vocab() {
    strs_.reserve(5200);
    roles_.reserve(5200);
    index_.reserve(5200);

    add_("<pad>", TokenRole::pad);
    begin_ = add_(">>>", TokenRole::structural);
    io_sep_ = add_("===", TokenRole::structural);
    section_sep_ = add_("###", TokenRole::structural);
    plus_ = add_("+", TokenRole::structural);
    digit0_ = add_("0", TokenRole::digit);
    for (int d = 1; d <= 9; ++d) add_(std::string(1, static_cast<char>('0' + d)), TokenRole::digit);
    letter_a_ = add_("a", TokenRole::bit_letter);
    letter_b_ = add_("b", TokenRole::bit_letter);
    constant_ = add_("#", TokenRole::constant_mark);

    static const std::array<const char*, 10> kColors = {"red",    "green", "yellow", "blue",  "orange",
                                                        "purple", "pink",  "brown",  "black", "white"};
    for (const char* c : kColors) colors_.push_back(add_(c, TokenRole::color));

    const int w_calculate = add_("Calculate", TokenRole::statement);
    const int w_the = add_("the", TokenRole::statement);
    const int w_running = add_("running", TokenRole::statement);
    const int w_parity = add_("parity", TokenRole::statement);
    const int w_of = add_("of", TokenRole::statement);
    const int w_sequence = add_("sequence", TokenRole::statement);
    const int w_sum = add_("sum", TokenRole::statement);
    const int w_after = add_("after", TokenRole::statement);
    example_sep_ = add_("<sep>", TokenRole::statement);
    stmt_parity_ = {w_calculate, w_the, w_running, w_parity, w_of, w_the, w_sequence, w_after, io_sep_};
    stmt_addition_ = {w_calculate, w_the, w_sum, w_of, w_the, w_sequence, w_after, io_sep_};

    // 4096 distinct 3-syllable words from 16 fixed CV syllables; the fixed
    // width of the syllables makes the composition a bijection.
    static const std::array<const char*, 16> kSyl = {"ba", "be", "bi", "bo", "bu", "ka", "ke", "ki",
                                                     "ko", "ku", "ma", "me", "mi", "mo", "mu", "na"};
    words_.reserve(4096);
    for (int i = 0; i < 4096; ++i) {
        std::string w;
        w.reserve(6);
        w += kSyl[static_cast<size_t>(i & 15)];
        w += kSyl[static_cast<size_t>((i >> 4) & 15)];
        w += kSyl[static_cast<size_t>((i >> 8) & 15)];
        words_.push_back(add_(std::move(w), TokenRole::word));
    }

    // Integer mnemonic pool. Values 1..9 reuse the digit tokens (the bit
    // alphabet a/b exists exactly so those don't collide with data digits in
    // the numeric variant); 10..1024 get their own tokens.
    integers_.reserve(1024);
    for (int v = 1; v <= 9; ++v) integers_.push_back(digit_id(v));
    for (int v = 10; v <= 1024; ++v) integers_.push_back(add_(std::to_string(v), TokenRole::integer));
}

const std::string& Vocab::str(int id) const {
    if (id < 0 || id >= size()) throw FormatError("vocab: id out of range: " + std::to_string(id));
    return strs_[static_cast<size_t>(id)];
}

int Vocab::id(std::string_view s) const {
    const auto it = index_.find(std::string(s));
    if (it == index_.end()) throw FormatError("vocab: unknown token: " + std::string(s));
    return it->second;
}

int Vocab::integer_token(int v) const {
    if (v < 1 || v > 1024) throw std::invalid_argument("integer_token: value out of pool range");
    return integers_[static_cast<size_t>(v - 1)];
}

const Vocab& global_vocab() {
    static const Vocab v;
    return v;
}

}  // namespace scratchbench
