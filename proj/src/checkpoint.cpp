#include "scratchbench/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

namespace scratchbench {

namespace {

constexpr char kMagic[4] = {'S', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

void write_bytes(std::FILE* f, const void* p, size_t n, const std::string& path) {
    if (std::fwrite(p, 1, n, f) != n) throw FormatError("checkpoint write failed: " + path);
}

template <class T>
void write_pod(std::FILE* f, T v, const std::string& path) {
    write_bytes(f, &v, sizeof(T), path);
}

void read_bytes(std::FILE* f, void* p, size_t n, const std::string& what) {
    if (std::fread(p, 1, n, f) != n) throw FormatError("checkpoint truncated while reading " + what);
}

template <class T>
T read_pod(std::FILE* f, const std::string& what) {
    T v;
    read_bytes(f, &v, sizeof(T), what);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TransformerWeights<float>& w,
                     const AdamState<float>* opt) {
    const std::string tmp = path + ".tmp";
    {
        FileHandle f(std::fopen(tmp.c_str(), "wb"));
        if (!f) throw FormatError("checkpoint: cannot open for writing: " + tmp);
        const ModelConfig& cfg = w.config();
        write_bytes(f.get(), kMagic, 4, tmp);
        write_pod(f.get(), kVersion, tmp);
        write_pod<int32_t>(f.get(), cfg.n_layers, tmp);
        write_pod<int32_t>(f.get(), cfg.n_heads, tmp);
        write_pod<int32_t>(f.get(), cfg.d_model, tmp);
        write_pod<int32_t>(f.get(), cfg.d_ff, tmp);
        write_pod<int32_t>(f.get(), cfg.vocab_size, tmp);
        write_pod<int32_t>(f.get(), cfg.max_seq_len, tmp);
        write_pod<uint8_t>(f.get(), static_cast<uint8_t>(cfg.pos), tmp);
        write_pod<double>(f.get(), cfg.rope_theta, tmp);
        write_pod<double>(f.get(), cfg.ln_eps, tmp);
        write_pod<uint64_t>(f.get(), cfg.init_seed, tmp);
        write_pod<uint8_t>(f.get(), opt ? 1 : 0, tmp);
        write_pod<uint64_t>(f.get(), opt ? opt->t : 0, tmp);
        const auto& params = w.params();
        write_pod<uint32_t>(f.get(), static_cast<uint32_t>(params.size()), tmp);
        for (const auto& p : params) {
            write_bytes(f.get(), p.w.data(), p.count() * sizeof(float), tmp);
        }
        if (opt) {
            if (opt->m.size() != params.size() || opt->v.size() != params.size()) {
                throw std::invalid_argument("save_checkpoint: optimizer state does not match weights");
            }
            for (size_t i = 0; i < params.size(); ++i) {
                write_bytes(f.get(), opt->m[i].data(), opt->m[i].size() * sizeof(float), tmp);
                write_bytes(f.get(), opt->v[i].data(), opt->v[i].size() * sizeof(float), tmp);
            }
        }
        if (std::fflush(f.get()) != 0) throw FormatError("checkpoint flush failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::string& path) {
    FileHandle f(std::fopen(path.c_str(), "rb"));
    if (!f) throw FormatError("checkpoint: cannot open: " + path);
    char magic[4];
    read_bytes(f.get(), magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("checkpoint: bad magic in " + path);
    const auto version = read_pod<uint32_t>(f.get(), "version");
    if (version != kVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " in " + path);
    }
    ModelConfig cfg;
    cfg.n_layers = read_pod<int32_t>(f.get(), "n_layers");
    cfg.n_heads = read_pod<int32_t>(f.get(), "n_heads");
    cfg.d_model = read_pod<int32_t>(f.get(), "d_model");
    cfg.d_ff = read_pod<int32_t>(f.get(), "d_ff");
    cfg.vocab_size = read_pod<int32_t>(f.get(), "vocab_size");
    cfg.max_seq_len = read_pod<int32_t>(f.get(), "max_seq_len");
    const auto scheme = read_pod<uint8_t>(f.get(), "pos_scheme");
    if (scheme > static_cast<uint8_t>(PosScheme::none)) {
        throw FormatError("checkpoint: bad positional scheme byte in " + path);
    }
    cfg.pos = static_cast<PosScheme>(scheme);
    cfg.rope_theta = read_pod<double>(f.get(), "rope_theta");
    cfg.ln_eps = read_pod<double>(f.get(), "ln_eps");
    cfg.init_seed = read_pod<uint64_t>(f.get(), "init_seed");
    const bool has_opt = read_pod<uint8_t>(f.get(), "has_opt") != 0;
    const auto adam_t = read_pod<uint64_t>(f.get(), "adam_t");
    const auto n_tensors = read_pod<uint32_t>(f.get(), "n_tensors");

    CheckpointData out;
    try {
        out.weights = TransformerWeights<float>::zeros(cfg);
    } catch (const ConfigError& e) {
        throw FormatError("checkpoint: invalid config in " + path + ": " + e.what());
    }
    auto& params = out.weights.params();
    if (n_tensors != params.size()) {
        throw FormatError("checkpoint: tensor count " + std::to_string(n_tensors) + " does not match config (" +
                          std::to_string(params.size()) + ") in " + path);
    }
    for (auto& p : params) {
        read_bytes(f.get(), p.w.data(), p.count() * sizeof(float), "weights of " + p.name);
    }
    out.has_opt = has_opt;
    if (has_opt) {
        out.opt = AdamState<float>::like(params);
        out.opt.t = adam_t;
        for (size_t i = 0; i < params.size(); ++i) {
            read_bytes(f.get(), out.opt.m[i].data(), out.opt.m[i].size() * sizeof(float), "adam m of " + params[i].name);
            read_bytes(f.get(), out.opt.v[i].data(), out.opt.v[i].size() * sizeof(float), "adam v of " + params[i].name);
        }
    }
    char extra;
    if (std::fread(&extra, 1, 1, f.get()) == 1) {
        throw FormatError("checkpoint: trailing bytes in " + path);
    }
    return out;
}

}  // namespace scratchbench
