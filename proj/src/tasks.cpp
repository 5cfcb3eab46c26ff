#include "scratchbench/tasks.hpp"

#include <algorithm>

namespace scratchbench {

const char* family_name(FormatFamily f) {
    switch (f) {
        case FormatFamily::direct: return "direct";
        case FormatFamily::scratchpad: return "scratchpad";
        case FormatFamily::interleaved: return "interleaved";
        case FormatFamily::mnemonic: return "mnemonic";
        case FormatFamily::numeric: return "numeric";
        case FormatFamily::constant: return "constant";
        case FormatFamily::nonaligned: return "nonaligned";
        case FormatFamily::cyclic: return "cyclic";
        case FormatFamily::interval: return "interval";
        case FormatFamily::zero_padded: return "zero_padded";
    }
    return "?";
}

FormatFamily parse_family(std::string_view s) {
    for (const FormatFamily f : {FormatFamily::direct, FormatFamily::scratchpad, FormatFamily::interleaved,
                                 FormatFamily::mnemonic, FormatFamily::numeric, FormatFamily::constant,
                                 FormatFamily::nonaligned, FormatFamily::cyclic, FormatFamily::interval,
                                 FormatFamily::zero_padded}) {
        if (s == family_name(f)) return f;
    }
    throw ConfigError("unknown format family: " + std::string(s));
}

const char* pool_name(MnemonicPool p) {
    switch (p) {
        case MnemonicPool::words: return "words";
        case MnemonicPool::integers: return "integers";
        case MnemonicPool::colors: return "colors";
    }
    return "?";
}

MnemonicPool parse_pool(std::string_view s) {
    if (s == "words") return MnemonicPool::words;
    if (s == "integers") return MnemonicPool::integers;
    if (s == "colors") return MnemonicPool::colors;
    throw ConfigError("unknown mnemonic pool: " + std::string(s));
}

const char* task_name(TaskKind k) { return k == TaskKind::parity ? "parity" : "addition"; }

TaskKind parse_task(std::string_view s) {
    if (s == "parity") return TaskKind::parity;
    if (s == "addition") return TaskKind::addition;
    throw ConfigError("unknown task: " + std::string(s));
}

void validate_variant(TaskKind kind, const FormatVariant& v) {
    if (kind == TaskKind::parity) {
        if (v.family == FormatFamily::zero_padded) {
            throw ConfigError("parity has no zero_padded family");
        }
        if (v.family == FormatFamily::interval && v.interval_k < 1) {
            throw ConfigError("interval_k must be >= 1");
        }
    } else {
        switch (v.family) {
            case FormatFamily::scratchpad:
            case FormatFamily::zero_padded:
            case FormatFamily::nonaligned: break;
            default:
                throw ConfigError(std::string("addition does not support family ") + family_name(v.family));
        }
    }
}

std::vector<int> parity_oracle(const std::vector<int>& bits) {
    std::vector<int> out(bits.size());
    int p = 0;
    for (size_t i = 0; i < bits.size(); ++i) {
        p ^= bits[i];
        out[i] = p;
    }
    return out;
}

AdditionResult addition_oracle(const std::vector<int>& a_digits, const std::vector<int>& b_digits) {
    const int alen = static_cast<int>(a_digits.size());
    const int blen = static_cast<int>(b_digits.size());
    const int places = std::max(alen, blen);
    AdditionResult r;
    r.reversed_sum.reserve(static_cast<size_t>(places) + 1);
    int carry = 0;
    for (int p = 0; p < places; ++p) {
        const int da = p < alen ? a_digits[static_cast<size_t>(alen - 1 - p)] : 0;
        const int db = p < blen ? b_digits[static_cast<size_t>(blen - 1 - p)] : 0;
        const int s = da + db + carry;
        r.reversed_sum.push_back(s % 10);
        carry = s / 10;
    }
    r.reversed_sum.push_back(carry);
    r.final_sum.assign(r.reversed_sum.rbegin(), r.reversed_sum.rend());
    return r;
}

TaskInstance sample_instance(TaskKind kind, int length, Rng& rng) {
    if (length < 1) throw std::invalid_argument("sample_instance: length must be >= 1");
    TaskInstance inst;
    inst.kind = kind;
    if (kind == TaskKind::parity) {
        inst.bits.resize(static_cast<size_t>(length));
        for (auto& b : inst.bits) b = static_cast<int>(rng.below(2));
    } else {
        auto gen_operand = [&rng](int len) {
            std::vector<int> d(static_cast<size_t>(len));
            if (len == 1) {
                d[0] = static_cast<int>(rng.below(10));
            } else {
                d[0] = 1 + static_cast<int>(rng.below(9));
                for (int i = 1; i < len; ++i) d[static_cast<size_t>(i)] = static_cast<int>(rng.below(10));
            }
            return d;
        };
        int alen = length;
        int blen = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(length)));
        if (rng.below(2) == 1) std::swap(alen, blen);
        inst.a_digits = gen_operand(alen);
        inst.b_digits = gen_operand(blen);
    }
    return inst;
}

int mnemonics_needed(TaskKind kind, const FormatVariant& v, const TaskInstance& inst) {
    if (kind == TaskKind::parity) {
        const int n = static_cast<int>(inst.bits.size());
        switch (v.family) {
            case FormatFamily::mnemonic: return n;
            case FormatFamily::nonaligned: return 2 * n;
            case FormatFamily::interval: return (n + v.interval_k - 1) / v.interval_k;
            default: return 0;
        }
    }
    if (!v.mnemonics) return 0;
    const int alen = static_cast<int>(inst.a_digits.size());
    const int blen = static_cast<int>(inst.b_digits.size());
    switch (v.family) {
        case FormatFamily::scratchpad:
        case FormatFamily::zero_padded: return std::max(alen, blen) + 1;
        case FormatFamily::nonaligned: return alen + blen;
        default: return 0;
    }
}

std::vector<int> sample_mnemonics(const Vocab& vocab, MnemonicPool pool, int count, Rng& rng) {
    std::span<const int> src;
    switch (pool) {
        case MnemonicPool::words: src = vocab.word_pool(); break;
        case MnemonicPool::integers: src = vocab.integer_pool(); break;
        case MnemonicPool::colors: src = vocab.color_pool(); break;
    }
    if (count > static_cast<int>(src.size())) {
        throw std::invalid_argument("sample_mnemonics: pool " + std::string(pool_name(pool)) + " has only " +
                                    std::to_string(src.size()) + " tokens, need " + std::to_string(count));
    }
    std::vector<int> ids(static_cast<size_t>(count));
    const auto idx = rng.sample_distinct(static_cast<int>(src.size()), count);
    for (int i = 0; i < count; ++i) ids[static_cast<size_t>(i)] = src[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    return ids;
}

void assign_mnemonics(TaskInstance& inst, const FormatVariant& v, const Vocab& vocab, Rng& rng) {
    const int need = mnemonics_needed(inst.kind, v, inst);
    inst.mnemonic_ids = need > 0 ? sample_mnemonics(vocab, v.pool, need, rng) : std::vector<int>{};
}

namespace {

// token for bit value: digits normally, a/b in the numeric variant
int bit_token(const Vocab& vocab, const FormatVariant& v, int bit) {
    if (v.family == FormatFamily::numeric) return bit ? vocab.letter_b_id() : vocab.letter_a_id();
    return vocab.digit_id(bit);
}

// mnemonic slot token for 1-based bit index i
int slot_token(const Vocab& vocab, const FormatVariant& v, const TaskInstance& inst, int i, bool output_side) {
    switch (v.family) {
        case FormatFamily::mnemonic:
            return inst.mnemonic_ids[static_cast<size_t>(i - 1)];
        case FormatFamily::numeric:
            return vocab.integer_token(i);
        case FormatFamily::constant:
            return vocab.constant_mark_id();
        case FormatFamily::cyclic: {
            const std::vector<int>& cyc = v.cycle;
            if (!cyc.empty()) return cyc[static_cast<size_t>((i - 1) % static_cast<int>(cyc.size()))];
            const auto pool = vocab.color_pool();
            return pool[static_cast<size_t>((i - 1) % static_cast<int>(pool.size()))];
        }
        case FormatFamily::nonaligned: {
            const int n = static_cast<int>(inst.bits.size());
            return inst.mnemonic_ids[static_cast<size_t>((output_side ? n : 0) + i - 1)];
        }
        default:
            throw std::logic_error("slot_token: family has no slots");
    }
}

}  // namespace

FormattedExample render_parity(const TaskInstance& inst, const FormatVariant& v, const Vocab& vocab) {
    validate_variant(TaskKind::parity, v);
    const int n = static_cast<int>(inst.bits.size());
    if (n < 1) throw std::invalid_argument("render_parity: empty bits");
    const std::vector<int> par = parity_oracle(inst.bits);
    FormattedExample ex;
    ex.length = n;
    auto& t = ex.tokens;

    switch (v.family) {
        case FormatFamily::direct: {
            t.push_back(vocab.begin_id());
            for (const int b : inst.bits) t.push_back(vocab.digit_id(b));
            t.push_back(vocab.io_sep_id());
            ex.prompt_len = static_cast<int>(t.size());
            t.push_back(vocab.digit_id(par.back()));
            ex.target_mask.assign(t.size(), 0);
            ex.target_mask.back() = 1;
            return ex;
        }
        case FormatFamily::scratchpad: {
            t.push_back(vocab.begin_id());
            for (const int b : inst.bits) t.push_back(vocab.digit_id(b));
            t.push_back(vocab.io_sep_id());
            ex.prompt_len = static_cast<int>(t.size());
            for (const int p : par) t.push_back(vocab.digit_id(p));
            ex.target_mask.assign(t.size(), 0);
            for (size_t i = static_cast<size_t>(ex.prompt_len); i < t.size(); ++i) ex.target_mask[i] = 1;
            return ex;
        }
        case FormatFamily::interleaved: {
            t.push_back(vocab.begin_id());
            ex.target_mask.push_back(0);
            for (int i = 0; i < n; ++i) {
                t.push_back(vocab.digit_id(inst.bits[static_cast<size_t>(i)]));
                ex.target_mask.push_back(0);
                t.push_back(vocab.digit_id(par[static_cast<size_t>(i)]));
                ex.target_mask.push_back(1);
            }
            ex.prompt_len = 2;
            return ex;
        }
        case FormatFamily::interval: {
            const int k = v.interval_k;
            t.push_back(vocab.begin_id());
            std::vector<uint8_t> is_parity_slot;  // for the output section
            for (int i = 1; i <= n; ++i) {
                if ((i - 1) % k == 0) t.push_back(inst.mnemonic_ids[static_cast<size_t>((i - 1) / k)]);
                t.push_back(vocab.digit_id(inst.bits[static_cast<size_t>(i - 1)]));
            }
            t.push_back(vocab.io_sep_id());
            ex.prompt_len = static_cast<int>(t.size());
            for (int i = 1; i <= n; ++i) {
                if ((i - 1) % k == 0) {
                    t.push_back(inst.mnemonic_ids[static_cast<size_t>((i - 1) / k)]);
                    is_parity_slot.push_back(0);
                }
                t.push_back(vocab.digit_id(par[static_cast<size_t>(i - 1)]));
                is_parity_slot.push_back(1);
            }
            ex.target_mask.assign(t.size(), 0);
            for (size_t i = 0; i < is_parity_slot.size(); ++i) {
                const size_t pos = static_cast<size_t>(ex.prompt_len) + i;
                ex.target_mask[pos] = v.env_forced ? is_parity_slot[i] : 1;
            }
            return ex;
        }
        case FormatFamily::mnemonic:
        case FormatFamily::numeric:
        case FormatFamily::constant:
        case FormatFamily::cyclic:
        case FormatFamily::nonaligned: {
            t.push_back(vocab.begin_id());
            for (int i = 1; i <= n; ++i) {
                t.push_back(slot_token(vocab, v, inst, i, false));
                t.push_back(bit_token(vocab, v, inst.bits[static_cast<size_t>(i - 1)]));
            }
            t.push_back(vocab.io_sep_id());
            ex.prompt_len = static_cast<int>(t.size());
            for (int i = 1; i <= n; ++i) {
                t.push_back(slot_token(vocab, v, inst, i, true));
                t.push_back(bit_token(vocab, v, par[static_cast<size_t>(i - 1)]));
            }
            ex.target_mask.assign(t.size(), 0);
            for (int i = 0; i < 2 * n; ++i) {
                const size_t pos = static_cast<size_t>(ex.prompt_len + i);
                ex.target_mask[pos] = v.env_forced ? static_cast<uint8_t>(i % 2 == 1) : 1;
            }
            return ex;
        }
        default:
            throw std::logic_error("render_parity: unhandled family");
    }
}

int parity_token_count(const FormatVariant& v, int n) {
    switch (v.family) {
        case FormatFamily::direct: return n + 3;
        case FormatFamily::scratchpad: return 2 * n + 2;
        case FormatFamily::interleaved: return 2 * n + 1;
        case FormatFamily::interval: {
            const int m = (n + v.interval_k - 1) / v.interval_k;
            return 2 * (n + m) + 2;
        }
        case FormatFamily::mnemonic:
        case FormatFamily::numeric:
        case FormatFamily::constant:
        case FormatFamily::cyclic:
        case FormatFamily::nonaligned: return 4 * n + 2;
        default:
            throw std::logic_error("parity_token_count: not a parity family");
    }
}

FormattedExample render_addition(const TaskInstance& inst, const FormatVariant& v, const Vocab& vocab) {
    validate_variant(TaskKind::addition, v);
    const int alen = static_cast<int>(inst.a_digits.size());
    const int blen = static_cast<int>(inst.b_digits.size());
    if (alen < 1 || blen < 1) throw std::invalid_argument("render_addition: empty operand");
    const int places = std::max(alen, blen);
    const AdditionResult sum = addition_oracle(inst.a_digits, inst.b_digits);

    FormattedExample ex;
    ex.length = places;
    auto& t = ex.tokens;
    std::vector<uint8_t> out_is_digit;  // parallel to output tokens

    const bool mn = v.mnemonics;
    const bool aligned = v.family == FormatFamily::scratchpad || v.family == FormatFamily::zero_padded;

    if (aligned) {
        // place -> mnemonic, assigned in first-appearance order
        std::vector<int> place_mn(static_cast<size_t>(places) + 1, -1);
        int next = 0;
        auto assign = [&](int place) {
            if (mn && place_mn[static_cast<size_t>(place)] < 0) {
                place_mn[static_cast<size_t>(place)] = inst.mnemonic_ids[static_cast<size_t>(next++)];
            }
        };
        auto emit_operand = [&](const std::vector<int>& digits) {
            const int len = static_cast<int>(digits.size());
            const int width = v.family == FormatFamily::zero_padded ? places : len;
            for (int p = width - 1; p >= 0; --p) {
                assign(p);
                if (mn) t.push_back(place_mn[static_cast<size_t>(p)]);
                const int d = p < len ? digits[static_cast<size_t>(len - 1 - p)] : 0;
                t.push_back(vocab.digit_id(d));
            }
            assign(places);
            if (mn) t.push_back(place_mn[static_cast<size_t>(places)]);
        };
        t.push_back(vocab.begin_id());
        emit_operand(inst.a_digits);
        t.push_back(vocab.plus_id());
        emit_operand(inst.b_digits);
        t.push_back(vocab.io_sep_id());
        ex.prompt_len = static_cast<int>(t.size());

        auto emit_pair = [&](int place) {
            if (mn) {
                t.push_back(place_mn[static_cast<size_t>(place)]);
                out_is_digit.push_back(0);
            }
            t.push_back(vocab.digit_id(sum.reversed_sum[static_cast<size_t>(place)]));
            out_is_digit.push_back(1);
        };
        for (int p = 0; p <= places; ++p) emit_pair(p);
        t.push_back(vocab.section_sep_id());
        out_is_digit.push_back(0);
        for (int p = places; p >= 0; --p) emit_pair(p);
    } else {
        // nonaligned: one mnemonic per digit occurrence, a's digits first
        auto a_mn = [&](int place) { return inst.mnemonic_ids[static_cast<size_t>(alen - 1 - place)]; };
        auto b_mn = [&](int place) { return inst.mnemonic_ids[static_cast<size_t>(alen + blen - 1 - place)]; };
        auto emit_operand = [&](const std::vector<int>& digits, bool is_b) {
            const int len = static_cast<int>(digits.size());
            for (int p = len - 1; p >= 0; --p) {
                if (mn) t.push_back(is_b ? b_mn(p) : a_mn(p));
                t.push_back(vocab.digit_id(digits[static_cast<size_t>(len - 1 - p)]));
            }
        };
        t.push_back(vocab.begin_id());
        emit_operand(inst.a_digits, false);
        t.push_back(vocab.plus_id());
        emit_operand(inst.b_digits, true);
        t.push_back(vocab.io_sep_id());
        ex.prompt_len = static_cast<int>(t.size());

        auto emit_group = [&](int place) {
            if (mn && place < blen) {
                t.push_back(b_mn(place));
                out_is_digit.push_back(0);
            }
            if (mn && place < alen) {
                t.push_back(a_mn(place));
                out_is_digit.push_back(0);
            }
            t.push_back(vocab.digit_id(sum.reversed_sum[static_cast<size_t>(place)]));
            out_is_digit.push_back(1);
        };
        for (int p = 0; p <= places; ++p) emit_group(p);
        t.push_back(vocab.section_sep_id());
        out_is_digit.push_back(0);
        for (int p = places; p >= 0; --p) emit_group(p);
    }

    ex.target_mask.assign(t.size(), 0);
    for (size_t i = 0; i < out_is_digit.size(); ++i) {
        const size_t pos = static_cast<size_t>(ex.prompt_len) + i;
        ex.target_mask[pos] = v.env_forced ? out_is_digit[i] : 1;
    }
    return ex;
}

FormattedExample render_example(const TaskInstance& inst, const FormatVariant& v, const Vocab& vocab) {
    return inst.kind == TaskKind::parity ? render_parity(inst, v, vocab) : render_addition(inst, v, vocab);
}

int infer_prompt_len(const Vocab& vocab, const std::vector<int>& tokens) {
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == vocab.io_sep_id()) return static_cast<int>(i) + 1;
    }
    return 2;  // interleaved: ">>> b1" then alternation begins
}

int infer_length(TaskKind kind, const FormatVariant& v, const Vocab& vocab, const std::vector<int>& tokens) {
    const int len = static_cast<int>(tokens.size());
    if (kind == TaskKind::parity) {
        switch (v.family) {
            case FormatFamily::direct: return len - 3;
            case FormatFamily::scratchpad: return (len - 2) / 2;
            case FormatFamily::interleaved: return (len - 1) / 2;
            case FormatFamily::interval: {
                for (int n = 1; n <= len; ++n) {
                    if (parity_token_count(v, n) == len) return n;
                }
                throw FormatError("infer_length: no interval length matches token count " + std::to_string(len));
            }
            default: return (len - 2) / 4;
        }
    }
    // addition: count tokens of each operand segment
    int plus_at = -1, sep_at = -1;
    for (int i = 0; i < len; ++i) {
        if (tokens[static_cast<size_t>(i)] == vocab.plus_id() && plus_at < 0) plus_at = i;
        if (tokens[static_cast<size_t>(i)] == vocab.io_sep_id()) {
            sep_at = i;
            break;
        }
    }
    if (plus_at < 0 || sep_at < 0) throw FormatError("infer_length: malformed addition example");
    const int a_tokens = plus_at - 1;
    const int b_tokens = sep_at - plus_at - 1;
    int alen, blen;
    if (!v.mnemonics) {
        alen = a_tokens;
        blen = b_tokens;
    } else if (v.family == FormatFamily::nonaligned) {
        alen = a_tokens / 2;
        blen = b_tokens / 2;
    } else {
        alen = (a_tokens - 1) / 2;
        blen = (b_tokens - 1) / 2;
    }
    return std::max(alen, blen);
}

FormattedExample render_fewshot_prompt(const Vocab& vocab, TaskKind kind,
                                       const std::vector<FormattedExample>& demos,
                                       const FormattedExample& query) {
    FormattedExample ex;
    const auto stmt = kind == TaskKind::parity ? vocab.statement_parity() : vocab.statement_addition();
    ex.tokens.assign(stmt.begin(), stmt.end());
    for (const auto& d : demos) {
        ex.tokens.push_back(vocab.example_sep_id());
        ex.tokens.insert(ex.tokens.end(), d.tokens.begin(), d.tokens.end());
    }
    ex.tokens.push_back(vocab.example_sep_id());
    const int offset = static_cast<int>(ex.tokens.size());
    ex.tokens.insert(ex.tokens.end(), query.tokens.begin(), query.tokens.end());
    ex.target_mask.assign(ex.tokens.size(), 0);
    for (size_t i = 0; i < query.target_mask.size(); ++i) {
        ex.target_mask[static_cast<size_t>(offset) + i] = query.target_mask[i];
    }
    ex.prompt_len = offset + query.prompt_len;
    ex.length = query.length;
    return ex;
}

}  // namespace scratchbench
