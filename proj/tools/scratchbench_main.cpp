// scratchbench: deterministic length-generalization bench for parity and
// multi-digit addition with scratchpad formats.
//
// Verbs: gen, train, eval, attribute, figures, verify.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scratchbench/attribution.hpp"
#include "scratchbench/checkpoint.hpp"
#include "scratchbench/config.hpp"
#include "scratchbench/dataset.hpp"
#include "scratchbench/errors.hpp"
#include "scratchbench/eval.hpp"
#include "scratchbench/svgplot.hpp"
#include "scratchbench/train.hpp"
#include "scratchbench/vocab.hpp"

namespace fs = std::filesystem;
using namespace scratchbench;

namespace {

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

const char* kUsage =
    "usage: scratchbench <command> [options]\n"
    "\n"
    "commands:\n"
    "  gen        --config FILE --out DIR [--set k=v ...]\n"
    "  train      --config FILE [--run DIR] [--seed N] [--set k=v ...]\n"
    "  eval       --run DIR [--lengths SPEC] [--n N] [--pool P] [--threads N]\n"
    "             [--checkpoint FILE] [--oracle-stub] [--out STEM]\n"
    "             (or --config FILE with --oracle-stub / --checkpoint)\n"
    "  attribute  --run DIR [--length N] [--checkpoint FILE]\n"
    "  figures    RECIPE [--out DIR] [--threads N] [--set k=v ...]\n"
    "  verify     --run DIR\n"
    "\n"
    "recipes: fig2 fig3 fig4 fig5 fig6 fig7 b2-intervals b4-ood\n"
    "\n"
    "Run directories default under $SCRATCHBENCH_RUNS (else ./runs). Length\n"
    "specs look like \"1..60\" or \"1..20,30,40\". --set keys use the config\n"
    "file syntax, e.g. --set train.steps_per_epoch=100.\n";

struct Cli {
    std::string verb;
    std::string config_path;
    std::string run;
    std::string out;
    std::string lengths;
    std::string checkpoint;
    std::string pool;
    std::string recipe;
    std::vector<std::string> sets;  // "key=value" overrides, in order
    int n = 0;
    int threads = 0;
    int length = 0;
    bool oracle_stub = false;
};

std::string need_value(int argc, char** argv, int& i, const char* flag) {
    if (i + 1 >= argc) throw UsageError(std::string(flag) + " requires a value");
    return argv[++i];
}

int need_int(int argc, char** argv, int& i, const char* flag) {
    const std::string v = need_value(argc, argv, i, flag);
    try {
        size_t used = 0;
        const int n = std::stoi(v, &used);
        if (used != v.size() || n < 1) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": expected a positive integer, got: " + v);
    }
}

Cli parse_cli(int argc, char** argv) {
    Cli cli;
    cli.verb = argv[1];
    int i = 2;
    if (cli.verb == "figures") {
        if (i >= argc || argv[i][0] == '-') throw UsageError("figures requires a recipe name");
        cli.recipe = argv[i++];
    }
    for (; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config") cli.config_path = need_value(argc, argv, i, "--config");
        else if (a == "--run") cli.run = need_value(argc, argv, i, "--run");
        else if (a == "--out") cli.out = need_value(argc, argv, i, "--out");
        else if (a == "--lengths") cli.lengths = need_value(argc, argv, i, "--lengths");
        else if (a == "--checkpoint") cli.checkpoint = need_value(argc, argv, i, "--checkpoint");
        else if (a == "--pool") cli.pool = need_value(argc, argv, i, "--pool");
        else if (a == "--set") {
            const std::string kv = need_value(argc, argv, i, "--set");
            if (kv.find('=') == std::string::npos) throw UsageError("--set expects key=value, got: " + kv);
            cli.sets.push_back(kv);
        } else if (a == "--seed") {
            cli.sets.push_back("seed=" + need_value(argc, argv, i, "--seed"));
        } else if (a == "--n") cli.n = need_int(argc, argv, i, "--n");
        else if (a == "--threads") cli.threads = need_int(argc, argv, i, "--threads");
        else if (a == "--length") cli.length = need_int(argc, argv, i, "--length");
        else if (a == "--oracle-stub") cli.oracle_stub = true;
        else throw UsageError("unknown option: " + a);
    }
    return cli;
}

std::string runs_root() {
    const char* env = std::getenv("SCRATCHBENCH_RUNS");
    return env && *env ? env : "runs";
}

// bare names land under the run root (unless they exist locally); anything
// path-like is taken verbatim
std::string resolve_run_dir(const std::string& name) {
    if (name.empty()) return name;
    if (name.front() == '/' || name.front() == '.' || name.find('/') != std::string::npos) return name;
    if (fs::exists(name)) return name;
    return runs_root() + "/" + name;
}

std::string auto_run_name(const ExperimentConfig& cfg) {
    std::string name = std::string(task_name(cfg.task)) + "-" + family_name(cfg.variant.family);
    if (cfg.variant.env_forced) name += "-forced";
    if (cfg.variant.pool != MnemonicPool::words) name += std::string("-") + pool_name(cfg.variant.pool);
    if (cfg.task == TaskKind::addition && !cfg.variant.mnemonics) name += "-plain";
    name += "-s" + std::to_string(cfg.seed);
    return name;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ExperimentConfig load_run_snapshot(const std::string& run_dir, const Vocab& vocab) {
    const std::string path = run_dir + "/config.snapshot";
    if (!fs::exists(path)) throw ConfigError("no config.snapshot in " + run_dir + " (train there first)");
    return parse_experiment_config(read_text_file(path), vocab);
}

// highest step-N.ckpt in run_dir/checkpoints
std::string final_checkpoint_path(const std::string& run_dir) {
    const std::string dir = run_dir + "/checkpoints";
    long long best = -1;
    std::string best_path;
    if (fs::exists(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            long long n = -1;
            const std::string name = entry.path().filename().string();
            if (std::sscanf(name.c_str(), "step-%lld.ckpt", &n) == 1 && n > best) {
                best = n;
                best_path = entry.path().string();
            }
        }
    }
    if (best < 0) throw ConfigError("no checkpoint under " + dir + " (train there first)");
    return best_path;
}

std::string variant_label(TaskKind task, const FormatVariant& v) {
    std::string s = family_name(v.family);
    if (v.family == FormatFamily::direct) s = "no scratchpad";
    if (v.family == FormatFamily::scratchpad && task == TaskKind::parity) s = "standard scratchpad";
    if (v.family == FormatFamily::interval) s += " k=" + std::to_string(v.interval_k);
    if (task == TaskKind::addition && !v.mnemonics) s += " (no mnemonics)";
    if (v.env_forced) s += " (forced)";
    return s;
}

Series curve_series(const LengthAccuracyCurve& curve, const std::string& label, const std::string& color) {
    Series s;
    s.label = label;
    s.color = color;
    for (const auto& row : curve.rows) {
        s.x.push_back(row.length);
        s.y.push_back(row.exact_match);
    }
    return s;
}

double exact_at_length(const LengthAccuracyCurve& curve, int length) {
    for (const auto& row : curve.rows) {
        if (row.length == length) return row.exact_match;
    }
    return -1.0;
}

// the report length when evaluated, else the longest evaluated length
int reference_length(const LengthAccuracyCurve& curve, int wanted) {
    return exact_at_length(curve, wanted) >= 0.0 ? wanted : curve.rows.back().length;
}

void print_curve_summary(const LengthAccuracyCurve& curve, const ExperimentConfig& cfg) {
    double win_sum = 0.0, all_sum = 0.0;
    int win_n = 0;
    int overflows = 0;
    for (const auto& row : curve.rows) {
        all_sum += row.exact_match;
        overflows += row.overflow_count;
        if (row.length >= cfg.train_min_length && row.length <= cfg.train_max_length) {
            win_sum += row.exact_match;
            ++win_n;
        }
    }
    std::printf("[eval] exact match: mean %.3f over %zu lengths", all_sum / static_cast<double>(curve.rows.size()),
                curve.rows.size());
    if (win_n > 0) {
        std::printf(" | train window %d..%d: %.3f", cfg.train_min_length, cfg.train_max_length,
                    win_sum / static_cast<double>(win_n));
    }
    const int last = curve.rows.back().length;
    std::printf(" | length %d: %.3f", last, exact_at_length(curve, last));
    if (overflows > 0) std::printf(" | %d overflows", overflows);
    std::printf("\n");
}

// ---------------------------------------------------------------------------

int cmd_gen(const Cli& cli, const Vocab& vocab) {
    if (cli.config_path.empty()) throw UsageError("gen requires --config");
    if (cli.out.empty()) throw UsageError("gen requires --out");
    const ExperimentConfig cfg = parse_experiment_config(read_text_file(cli.config_path), vocab, cli.sets);
    generate_dataset_files(cfg.dataset_spec(), cli.out, vocab);
    const auto manifest = read_manifest(cli.out + "/manifest.txt");
    std::printf("[gen] wrote %s (train %s, eval %s examples, lengths %d..%d)\n", cli.out.c_str(),
                manifest.at("train_count").c_str(), manifest.at("eval_count").c_str(), cfg.train_min_length,
                cfg.train_max_length);
    return 0;
}

// generates (or re-derives, byte-identically) the run's dataset, writes the
// resolved config snapshot, trains (resuming if checkpoints exist)
RunRecord train_into(const std::string& run_dir, const ExperimentConfig& cfg, const Vocab& vocab) {
    fs::create_directories(run_dir);
    const std::string snapshot = canonical_snapshot(cfg, vocab);
    const std::string snap_path = run_dir + "/config.snapshot";
    if (fs::exists(snap_path)) {
        if (read_text_file(snap_path) != snapshot) {
            throw ConfigError(run_dir + " already holds a different config; pick a fresh --run dir");
        }
    } else {
        std::ofstream f(snap_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + snap_path);
        f << snapshot;
    }
    const std::string data_dir = run_dir + "/data";
    generate_dataset_files(cfg.dataset_spec(), data_dir, vocab);
    const auto train_split = load_examples(data_dir + "/train.txt", cfg.task, cfg.variant, vocab);
    const auto eval_split = load_examples(data_dir + "/eval.txt", cfg.task, cfg.variant, vocab);
    return train_run(run_dir, cfg.train, cfg.model, train_split, eval_split);
}

int cmd_train(const Cli& cli, const Vocab& vocab) {
    if (cli.config_path.empty()) throw UsageError("train requires --config");
    const ExperimentConfig cfg = parse_experiment_config(read_text_file(cli.config_path), vocab, cli.sets);
    const std::string run_dir = resolve_run_dir(cli.run.empty() ? auto_run_name(cfg) : cli.run);
    const RunRecord rec = train_into(run_dir, cfg, vocab);
    if (rec.steps_run == 0) {
        std::printf("[train] %s already complete (checkpoint %s)\n", run_dir.c_str(), rec.final_checkpoint.c_str());
        return 0;
    }
    std::printf("[train] %lld steps in %.1fs, checkpoint %s\n", static_cast<long long>(rec.steps_run),
                rec.wall_seconds, rec.final_checkpoint.c_str());
    for (auto it = rec.rows.rbegin(); it != rec.rows.rend(); ++it) {
        if (it->split == "heldout" && it->length == 0) {
            std::printf("[train] heldout exact match %.4f at step %lld\n", it->accuracy,
                        static_cast<long long>(it->step));
            break;
        }
    }
    return 0;
}

struct EvalOutput {
    LengthAccuracyCurve curve;
    std::string csv, svg;
};

EvalOutput run_eval(const ExperimentConfig& cfg, const FormatVariant& variant, const PredictorFactory& factory,
                    const Vocab& vocab, const std::string& stem, const std::string& title) {
    EvalOutput out;
    out.curve = length_curve(factory, cfg.task, variant, vocab, cfg.eval_lengths, cfg.eval_n_per_length, cfg.seed,
                             cfg.eval_threads);
    out.csv = stem + ".csv";
    out.svg = stem + ".svg";
    write_curve_csv(out.csv, out.curve);
    LinePlotSpec spec;
    spec.title = title;
    spec.x_label = "test length";
    spec.y_label = "exact match";
    spec.shade_x0 = cfg.train_min_length;
    spec.shade_x1 = cfg.train_max_length;
    std::vector<Series> series;
    series.push_back(curve_series(out.curve, "exact match", ""));
    Series pt;
    pt.label = "per token";
    for (const auto& row : out.curve.rows) {
        pt.x.push_back(row.length);
        pt.y.push_back(row.per_token);
    }
    series.push_back(pt);
    write_line_svg(out.svg, series, spec);
    return out;
}

int cmd_eval(const Cli& cli, const Vocab& vocab) {
    ExperimentConfig cfg;
    std::string run_dir;
    if (!cli.run.empty()) {
        run_dir = resolve_run_dir(cli.run);
        cfg = load_run_snapshot(run_dir, vocab);
    } else if (!cli.config_path.empty()) {
        cfg = parse_experiment_config(read_text_file(cli.config_path), vocab, cli.sets);
    } else {
        throw UsageError("eval requires --run (or --config with --oracle-stub/--checkpoint)");
    }
    if (!cli.lengths.empty()) cfg.eval_lengths = parse_length_list(cli.lengths);
    if (cli.n > 0) cfg.eval_n_per_length = cli.n;
    if (cli.threads > 0) cfg.eval_threads = cli.threads;
    if (!cli.pool.empty()) cfg.eval_pool = parse_pool(cli.pool);
    const FormatVariant variant = cfg.eval_variant();

    std::string stem = cli.out.empty() ? (cli.oracle_stub ? "oracle_curve" : "curve") : cli.out;
    if (stem.find('/') == std::string::npos && !run_dir.empty()) stem = run_dir + "/" + stem;

    CheckpointData ckpt;  // keeps weights alive for the factory
    PredictorFactory factory;
    std::string title = std::string(task_name(cfg.task)) + ", " + variant_label(cfg.task, variant);
    if (cli.oracle_stub) {
        factory = oracle_predictor_factory();
        title += " (oracle stub)";
    } else {
        const std::string path = cli.checkpoint.empty() ? final_checkpoint_path(run_dir) : cli.checkpoint;
        ckpt = load_checkpoint(path);
        factory = model_predictor_factory(ckpt.weights);
    }

    const EvalOutput out = run_eval(cfg, variant, factory, vocab, stem, title);
    std::printf("[eval] wrote %s and %s\n", out.csv.c_str(), out.svg.c_str());
    print_curve_summary(out.curve, cfg);
    return 0;
}

int cmd_attribute(const Cli& cli, const Vocab& vocab) {
    if (cli.run.empty()) throw UsageError("attribute requires --run");
    const std::string run_dir = resolve_run_dir(cli.run);
    const ExperimentConfig cfg = load_run_snapshot(run_dir, vocab);
    const int length = cli.length > 0 ? cli.length : cfg.attribution_length;

    const std::string path = cli.checkpoint.empty() ? final_checkpoint_path(run_dir) : cli.checkpoint;
    CheckpointData ckpt = load_checkpoint(path);

    // fixed probe instance in the training format at the requested length
    Rng rng(derive_seed(cfg.seed, "eval-instance", static_cast<uint64_t>(length), 0));
    TaskInstance inst = sample_instance(cfg.task, length, rng);
    assign_mnemonics(inst, cfg.variant, vocab, rng);
    const FormattedExample ex = render_example(inst, cfg.variant, vocab);

    ModelPredictor predictor(ckpt.weights);
    const EnvDecodeResult dec = env_forced_decode(predictor, ex);
    if (dec.overflow) {
        throw std::runtime_error("attribution probe at length " + std::to_string(length) +
                                 " overflows the position table; shorten the probe");
    }
    FormattedExample completed = ex;
    size_t next = 0;
    for (size_t j = static_cast<size_t>(ex.prompt_len); j < ex.tokens.size(); ++j) {
        if (ex.target_mask[j]) completed.tokens[j] = dec.predictions.at(next++);
    }
    std::printf("[attribute] probe length %d, exact match %d\n", length, exact_match(ex, dec.predictions) ? 1 : 0);

    const AttributionMap map = grad_x_input_map(ckpt.weights, completed, vocab);
    const std::string stem = run_dir + "/attribution";
    export_heatmap(map, stem);
    std::printf("[attribute] %dx%d map -> %s.csv %s_l2.csv %s.pgm %s.svg\n", map.rows, map.cols, stem.c_str(),
                stem.c_str(), stem.c_str(), stem.c_str());
    return 0;
}

int cmd_verify(const Cli& cli, const Vocab& vocab) {
    if (cli.run.empty()) throw UsageError("verify requires --run");
    const std::string run_dir = resolve_run_dir(cli.run);
    const std::string data_dir = fs::exists(run_dir + "/config.snapshot") ? run_dir + "/data" : run_dir;
    const std::string manifest_path = data_dir + "/manifest.txt";
    if (!fs::exists(manifest_path)) throw ConfigError("no manifest at " + manifest_path);
    const auto manifest = read_manifest(manifest_path);

    const auto need = [&manifest, &manifest_path](const std::string& key) -> const std::string& {
        const auto it = manifest.find(key);
        if (it == manifest.end()) throw ConfigError(manifest_path + ": missing key " + key);
        return it->second;
    };

    bool ok = true;
    const auto check = [&ok](const std::string& what, const std::string& want, const std::string& got) {
        const bool match = want == got;
        std::printf("[verify] %-18s %s\n", what.c_str(), match ? "ok" : ("MISMATCH want=" + want + " got=" + got).c_str());
        ok = ok && match;
    };

    char hex[17];
    // 1. on-disk split files still hash to the manifest values
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a_file(data_dir + "/" + need("train_file"))));
    check("train file hash", need("train_fnv1a"), hex);
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a_file(data_dir + "/" + need("eval_file"))));
    check("eval file hash", need("eval_fnv1a"), hex);
    check("vocab size", need("vocab_size"), std::to_string(vocab.size()));

    // 2. regeneration from the manifest's parameters reproduces the hashes
    DatasetSpec spec;
    spec.kind = parse_task(need("task"));
    spec.variant.family = parse_family(need("family"));
    spec.variant.env_forced = need("env_forced") == "1";
    spec.variant.pool = parse_pool(need("pool"));
    if (manifest.count("interval_k")) spec.variant.interval_k = std::stoi(manifest.at("interval_k"));
    if (manifest.count("mnemonics")) spec.variant.mnemonics = manifest.at("mnemonics") == "1";
    if (manifest.count("cycle")) {
        std::istringstream cyc(manifest.at("cycle"));
        std::string tok;
        while (std::getline(cyc, tok, ',')) spec.variant.cycle.push_back(vocab.id(tok));
    }
    spec.seed = std::stoull(need("seed"));
    spec.min_length = std::stoi(need("min_length"));
    spec.max_length = std::stoi(need("max_length"));
    spec.per_length = std::stoi(need("per_length"));
    spec.holdout_per_length = std::stoi(need("holdout_per_length"));

    const std::string tmp = data_dir + "/.verify_tmp";
    generate_dataset_files(spec, tmp, vocab);
    const auto redo = read_manifest(tmp + "/manifest.txt");
    check("train regeneration", need("train_fnv1a"), redo.at("train_fnv1a"));
    check("eval regeneration", need("eval_fnv1a"), redo.at("eval_fnv1a"));
    fs::remove_all(tmp);

    if (!ok) {
        std::fprintf(stderr, "verify failed for %s\n", data_dir.c_str());
        return 1;
    }
    std::printf("[verify] %s ok\n", data_dir.c_str());
    return 0;
}

// --- figures ---------------------------------------------------------------

struct RecipeArm {
    std::string name;   // directory name under the recipe dir
    std::string label;  // legend label
    std::vector<std::string> sets;
};

struct Recipe {
    std::string base;  // config text shared by every arm
    std::vector<RecipeArm> arms;
    int report_length = 40;  // reference length echoed per arm
    bool attribution = false;
    bool ood_eval = false;  // per-arm ID + OOD pool curves
};

Recipe make_recipe(const std::string& name) {
    Recipe r;
    // recipes inherit the desk positional scheme; --set model.pos=... overrides
    r.base = "task.kind=parity\nmodel.pos=alibi\n";
    if (name == "fig2") {
        r.arms = {{"direct", "no scratchpad", {"task.family=direct"}},
                  {"scratchpad", "standard scratchpad", {"task.family=scratchpad"}},
                  {"interleaved", "interleaved", {"task.family=interleaved"}}};
        return r;
    }
    if (name == "fig3") {
        r.arms = {{"scratchpad", "standard scratchpad", {"task.family=scratchpad"}},
                  {"mnemonic", "mnemonics", {"task.family=mnemonic"}},
                  {"mnemonic_forced", "mnemonics (forced)", {"task.family=mnemonic", "task.env_forced=1"}}};
        return r;
    }
    if (name == "fig4") {
        // same contrast with a doubled step budget
        TrainConfig t;
        apply_preset(t, "desk", TaskKind::parity);
        const std::string dbl = "train.steps_per_epoch=" + std::to_string(2 * t.steps_per_epoch);
        r.arms = {{"scratchpad", "standard scratchpad", {"task.family=scratchpad", dbl}},
                  {"mnemonic", "mnemonics", {"task.family=mnemonic", dbl}},
                  {"mnemonic_forced", "mnemonics (forced)", {"task.family=mnemonic", "task.env_forced=1", dbl}}};
        return r;
    }
    if (name == "fig5") {
        r.attribution = true;
        r.arms = {{"scratchpad", "standard scratchpad", {"task.family=scratchpad", "attribution.enabled=1"}},
                  {"mnemonic", "mnemonics", {"task.family=mnemonic", "attribution.enabled=1"}}};
        return r;
    }
    if (name == "fig6") {
        r.arms = {{"mnemonic", "mnemonic", {"task.family=mnemonic", "task.env_forced=1"}},
                  {"numeric", "numeric", {"task.family=numeric", "task.env_forced=1"}},
                  {"constant", "constant", {"task.family=constant", "task.env_forced=1"}},
                  {"nonaligned", "non-aligned", {"task.family=nonaligned", "task.env_forced=1"}},
                  {"cyclic", "cyclic", {"task.family=cyclic", "task.env_forced=1"}}};
        return r;
    }
    if (name == "fig7") {
        r.base = "task.kind=addition\nmodel.pos=alibi\n";
        r.report_length = 14;
        r.arms = {{"plain", "no mnemonics", {"task.family=scratchpad", "task.mnemonics=0"}},
                  {"aligned", "digit-aligned", {"task.family=scratchpad"}},
                  {"zero_padded", "zero-padded", {"task.family=zero_padded"}},
                  {"nonaligned", "non-aligned", {"task.family=nonaligned"}}};
        return r;
    }
    if (name == "b2-intervals") {
        for (const int k : {1, 2, 3, 5}) {
            r.arms.push_back({"k" + std::to_string(k), "interval k=" + std::to_string(k),
                              {"task.family=interval", "task.interval_k=" + std::to_string(k)}});
        }
        return r;
    }
    if (name == "b4-ood") {
        r.ood_eval = true;
        r.arms = {{"mnemonic_forced", "mnemonics (forced)", {"task.family=mnemonic", "task.env_forced=1"}}};
        return r;
    }
    throw UsageError("unknown recipe: " + name +
                     " (available: fig2 fig3 fig4 fig5 fig6 fig7 b2-intervals b4-ood)");
}

int cmd_figures(const Cli& cli, const Vocab& vocab) {
    const Recipe recipe = make_recipe(cli.recipe);
    const std::string out_dir = cli.out.empty() ? runs_root() + "/" + cli.recipe : cli.out;
    fs::create_directories(out_dir);

    std::vector<Series> overlay;
    LinePlotSpec plot;
    plot.x_label = "test length";
    plot.y_label = "exact match";
    plot.title = cli.recipe;
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    size_t color = 0;

    for (const auto& arm : recipe.arms) {
        std::string text = recipe.base;
        for (const auto& s : arm.sets) text += s + "\n";
        std::vector<std::string> sets = cli.sets;
        if (cli.threads > 0) sets.push_back("eval.threads=" + std::to_string(cli.threads));
        const ExperimentConfig cfg = parse_experiment_config(text, vocab, sets);
        const std::string arm_dir = out_dir + "/" + arm.name;

        std::printf("[figures] %s: training %s\n", cli.recipe.c_str(), arm.name.c_str());
        std::fflush(stdout);
        const RunRecord rec = train_into(arm_dir, cfg, vocab);
        if (rec.steps_run > 0) {
            std::printf("[figures] %s: %lld steps in %.1fs\n", arm.name.c_str(),
                        static_cast<long long>(rec.steps_run), rec.wall_seconds);
        }

        CheckpointData ckpt = load_checkpoint(final_checkpoint_path(arm_dir));
        const PredictorFactory factory = model_predictor_factory(ckpt.weights);

        plot.shade_x0 = cfg.train_min_length;
        plot.shade_x1 = cfg.train_max_length;

        if (recipe.attribution) {
            Cli sub;
            sub.run = arm_dir;
            cmd_attribute(sub, vocab);
            continue;
        }

        const std::string title = std::string(task_name(cfg.task)) + ", " + variant_label(cfg.task, cfg.variant);
        if (recipe.ood_eval) {
            ExperimentConfig id_cfg = cfg;
            const EvalOutput id_out =
                run_eval(id_cfg, id_cfg.eval_variant(), factory, vocab, arm_dir + "/curve_id", title + ", ID pool");
            ExperimentConfig ood_cfg = cfg;
            ood_cfg.eval_pool = cfg.variant.pool == MnemonicPool::integers ? MnemonicPool::words : MnemonicPool::integers;
            const EvalOutput ood_out = run_eval(ood_cfg, ood_cfg.eval_variant(), factory, vocab,
                                                arm_dir + "/curve_ood", title + ", OOD pool");
            overlay.push_back(curve_series(id_out.curve, "ID mnemonics", palette[color++ % 6]));
            overlay.push_back(curve_series(ood_out.curve, "OOD mnemonics", palette[color++ % 6]));
            const int at = reference_length(id_out.curve, recipe.report_length);
            std::printf("[figures] %s: ID exact@%d %.3f, OOD exact@%d %.3f\n", arm.name.c_str(), at,
                        exact_at_length(id_out.curve, at), at, exact_at_length(ood_out.curve, at));
        } else {
            const EvalOutput out = run_eval(cfg, cfg.eval_variant(), factory, vocab, arm_dir + "/curve", title);
            overlay.push_back(curve_series(out.curve, arm.label, palette[color++ % 6]));
            const int at = reference_length(out.curve, recipe.report_length);
            std::printf("[figures] %s: exact@%d %.3f\n", arm.name.c_str(), at, exact_at_length(out.curve, at));
        }
        std::fflush(stdout);
    }

    if (!overlay.empty()) {
        const std::string svg = out_dir + "/" + cli.recipe + ".svg";
        write_line_svg(svg, overlay, plot);
        std::printf("[figures] wrote %s\n", svg.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fputs(kUsage, stderr);
        return 2;
    }
    const std::string verb = argv[1];
    if (verb == "--help" || verb == "-h" || verb == "help") {
        std::fputs(kUsage, stdout);
        return 0;
    }
    try {
        const Cli cli = parse_cli(argc, argv);
        const Vocab vocab;
        if (verb == "gen") return cmd_gen(cli, vocab);
        if (verb == "train") return cmd_train(cli, vocab);
        if (verb == "eval") return cmd_eval(cli, vocab);
        if (verb == "attribute") return cmd_attribute(cli, vocab);
        if (verb == "figures") return cmd_figures(cli, vocab);
        if (verb == "verify") return cmd_verify(cli, vocab);
        std::fprintf(stderr, "unknown command: %s\n\n%s", verb.c_str(), kUsage);
        return 2;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
