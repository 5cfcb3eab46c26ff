#include "scratchbench/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "scratchbench/rng.hpp"

namespace scratchbench {

namespace {

std::string instance_key(const TaskInstance& inst) {
    std::string k;
    if (inst.kind == TaskKind::parity) {
        k.reserve(inst.bits.size());
        for (const int b : inst.bits) k.push_back(static_cast<char>('0' + b));
    } else {
        for (const int d : inst.a_digits) k.push_back(static_cast<char>('0' + d));
        k.push_back('+');
        for (const int d : inst.b_digits) k.push_back(static_cast<char>('0' + d));
    }
    return k;
}

}  // namespace

long double instance_space(TaskKind kind, int length) {
    if (kind == TaskKind::parity) {
        return powl(2.0L, static_cast<long double>(length));
    }
    // ordered pairs (a, b) where one operand has exactly `length` digits and
    // the other has 1..length digits; d(L) operands have exactly L digits
    auto d = [](int l) { return l == 1 ? 10.0L : 9.0L * powl(10.0L, l - 1); };
    long double cum = 0.0L;
    for (int l = 1; l <= length; ++l) cum += d(l);
    const long double dl = d(length);
    return dl * (2.0L * cum - dl);
}

DatasetSplits build_dataset(const DatasetSpec& spec, const Vocab& vocab) {
    validate_variant(spec.kind, spec.variant);
    if (spec.min_length < 1 || spec.max_length < spec.min_length) {
        throw ConfigError("build_dataset: bad length range [" + std::to_string(spec.min_length) + ", " +
                          std::to_string(spec.max_length) + "]");
    }
    if (spec.holdout_per_length < 0 || spec.per_length < spec.holdout_per_length) {
        throw ConfigError("build_dataset: need per_length >= holdout_per_length >= 0");
    }
    const int train_per_length = spec.per_length - spec.holdout_per_length;

    DatasetSplits out;
    for (int length = spec.min_length; length <= spec.max_length; ++length) {
        const long double space = instance_space(spec.kind, length);
        if (static_cast<long double>(spec.holdout_per_length) > space) {
            throw ConfigError("build_dataset: " + std::to_string(spec.holdout_per_length) +
                              " distinct holdout instances requested at length " + std::to_string(length) +
                              " but only " + std::to_string(static_cast<double>(space)) + " exist");
        }
        if (train_per_length > 0 && static_cast<long double>(spec.holdout_per_length) >= space) {
            throw ConfigError("build_dataset: holdout exhausts the instance space at length " +
                              std::to_string(length) + "; nothing left to train on");
        }
        std::unordered_set<std::string> held;
        held.reserve(static_cast<size_t>(spec.holdout_per_length) * 2);
        for (int i = 0; i < spec.per_length; ++i) {
            const bool for_eval = i < spec.holdout_per_length;
            Rng rng(derive_seed(spec.seed, "dataset", static_cast<uint64_t>(length), static_cast<uint64_t>(i)));
            TaskInstance inst;
            while (true) {
                inst = sample_instance(spec.kind, length, rng);
                const std::string key = instance_key(inst);
                if (for_eval) {
                    if (held.insert(key).second) break;  // fresh holdout instance
                } else {
                    if (held.find(key) == held.end()) break;  // anything outside holdout
                }
            }
            assign_mnemonics(inst, spec.variant, vocab, rng);
            auto ex = render_example(inst, spec.variant, vocab);
            (for_eval ? out.eval : out.train).push_back(std::move(ex));
        }
    }
    return out;
}

void write_examples(const std::string& path, const std::vector<FormattedExample>& examples, const Vocab& vocab) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_examples: cannot open " + path);
    for (const auto& ex : examples) {
        for (size_t i = 0; i < ex.tokens.size(); ++i) {
            if (i) f << ' ';
            f << vocab.str(ex.tokens[i]);
        }
        f << '\t';
        for (const auto m : ex.target_mask) f << (m ? '1' : '0');
        f << '\n';
    }
    if (!f) throw std::runtime_error("write_examples: write failed for " + path);
}

std::vector<FormattedExample> load_examples(const std::string& path, TaskKind kind, const FormatVariant& variant,
                                            const Vocab& vocab) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_examples: cannot open " + path);
    std::vector<FormattedExample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError("load_examples: " + path + ":" + std::to_string(lineno) + ": missing tab");
        }
        FormattedExample ex;
        std::istringstream toks(line.substr(0, tab));
        std::string t;
        while (toks >> t) ex.tokens.push_back(vocab.id(t));
        const std::string mask = line.substr(tab + 1);
        if (mask.size() != ex.tokens.size()) {
            throw FormatError("load_examples: " + path + ":" + std::to_string(lineno) + ": mask length " +
                              std::to_string(mask.size()) + " != token count " + std::to_string(ex.tokens.size()));
        }
        ex.target_mask.reserve(mask.size());
        for (const char c : mask) {
            if (c != '0' && c != '1') {
                throw FormatError("load_examples: " + path + ":" + std::to_string(lineno) + ": bad mask char");
            }
            ex.target_mask.push_back(c == '1');
        }
        ex.prompt_len = infer_prompt_len(vocab, ex.tokens);
        ex.length = infer_length(kind, variant, vocab, ex.tokens);
        out.push_back(std::move(ex));
    }
    return out;
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("fnv1a_file: cannot open " + path);
    uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) {
        const std::streamsize n = f.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!f) break;
    }
    return h;
}

std::string variant_manifest_block(TaskKind kind, const FormatVariant& v, const Vocab& vocab) {
    std::ostringstream s;
    s << "task=" << task_name(kind) << '\n';
    s << "family=" << family_name(v.family) << '\n';
    s << "env_forced=" << (v.env_forced ? 1 : 0) << '\n';
    s << "pool=" << pool_name(v.pool) << '\n';
    if (v.family == FormatFamily::interval) s << "interval_k=" << v.interval_k << '\n';
    if (kind == TaskKind::addition) s << "mnemonics=" << (v.mnemonics ? 1 : 0) << '\n';
    if (v.family == FormatFamily::cyclic) {
        s << "cycle=";
        if (v.cycle.empty()) {
            const auto pool = vocab.color_pool();
            for (size_t i = 0; i < pool.size(); ++i) s << (i ? "," : "") << vocab.str(pool[i]);
        } else {
            for (size_t i = 0; i < v.cycle.size(); ++i) s << (i ? "," : "") << vocab.str(v.cycle[i]);
        }
        s << '\n';
    }
    return s.str();
}

void write_manifest(const std::string& path, const DatasetSpec& spec, const DatasetSplits& splits,
                    const std::string& train_file, const std::string& eval_file, const Vocab& vocab) {
    std::ostringstream s;
    s << variant_manifest_block(spec.kind, spec.variant, vocab);
    s << "seed=" << spec.seed << '\n';
    s << "min_length=" << spec.min_length << '\n';
    s << "max_length=" << spec.max_length << '\n';
    s << "per_length=" << spec.per_length << '\n';
    s << "holdout_per_length=" << spec.holdout_per_length << '\n';
    s << "train_count=" << splits.train.size() << '\n';
    s << "eval_count=" << splits.eval.size() << '\n';
    s << "vocab_size=" << vocab.size() << '\n';
    // basenames, so a relocated run directory still verifies
    s << "train_file=" << std::filesystem::path(train_file).filename().string() << '\n';
    s << "eval_file=" << std::filesystem::path(eval_file).filename().string() << '\n';
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a_file(train_file)));
    s << "train_fnv1a=" << hex << '\n';
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a_file(eval_file)));
    s << "eval_fnv1a=" << hex << '\n';
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_manifest: cannot open " + path);
    f << s.str();
    if (!f) throw std::runtime_error("write_manifest: write failed for " + path);
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_manifest: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("read_manifest: " + path + ":" + std::to_string(lineno) + ": missing '='");
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void generate_dataset_files(const DatasetSpec& spec, const std::string& out_dir, const Vocab& vocab) {
    std::filesystem::create_directories(out_dir);
    const auto splits = build_dataset(spec, vocab);
    const std::string train_file = out_dir + "/train.txt";
    const std::string eval_file = out_dir + "/eval.txt";
    write_examples(train_file, splits.train, vocab);
    write_examples(eval_file, splits.eval, vocab);
    write_manifest(out_dir + "/manifest.txt", spec, splits, train_file, eval_file, vocab);
}

}  // namespace scratchbench
