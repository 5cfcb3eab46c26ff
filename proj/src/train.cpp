#include "scratchbench/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "scratchbench/checkpoint.hpp"
#include "scratchbench/eval.hpp"
#include "scratchbench/rng.hpp"
#include "scratchbench/tensor.hpp"

namespace scratchbench {

Batch assemble_batch(const std::vector<const FormattedExample*>& examples, int pad_token, int max_len) {
    if (examples.empty()) throw std::invalid_argument("assemble_batch: empty batch");
    Batch b;
    b.batch = static_cast<int>(examples.size());
    for (const auto* ex : examples) {
        const int len = static_cast<int>(ex->tokens.size());
        if (max_len > 0 && len > max_len) {
            throw PositionOverflow("assemble_batch: example of " + std::to_string(len) +
                                   " tokens exceeds max_seq_len " + std::to_string(max_len));
        }
        b.width = std::max(b.width, len);
    }
    b.tokens.assign(static_cast<size_t>(b.batch) * b.width, pad_token);
    b.targets.assign(static_cast<size_t>(b.batch) * b.width, -1);
    b.loss_mask.assign(static_cast<size_t>(b.batch) * b.width, 0);
    b.lengths.resize(static_cast<size_t>(b.batch));
    for (int e = 0; e < b.batch; ++e) {
        const auto& ex = *examples[static_cast<size_t>(e)];
        const int len = static_cast<int>(ex.tokens.size());
        b.lengths[static_cast<size_t>(e)] = len;
        const size_t base = static_cast<size_t>(e) * b.width;
        for (int j = 0; j < len; ++j) b.tokens[base + static_cast<size_t>(j)] = ex.tokens[static_cast<size_t>(j)];
        // logits row j predicts token j+1
        for (int j = 0; j + 1 < len; ++j) {
            if (ex.target_mask[static_cast<size_t>(j) + 1]) {
                b.targets[base + static_cast<size_t>(j)] = ex.tokens[static_cast<size_t>(j) + 1];
                b.loss_mask[base + static_cast<size_t>(j)] = 1;
            }
        }
    }
    return b;
}

std::vector<size_t> sample_batch_indices(uint64_t seed, int64_t step, size_t pool_size, int batch_size) {
    if (pool_size == 0) throw std::invalid_argument("sample_batch_indices: empty pool");
    Rng rng(derive_seed(seed, "batch", static_cast<uint64_t>(step)));
    std::vector<size_t> idx(static_cast<size_t>(batch_size));
    for (auto& i : idx) i = static_cast<size_t>(rng.below(pool_size));
    return idx;
}

std::vector<FormattedExample> probe_subset(const std::vector<FormattedExample>& eval_split, int count) {
    std::map<int, std::vector<size_t>> by_length;
    for (size_t i = 0; i < eval_split.size(); ++i) by_length[eval_split[i].length].push_back(i);
    std::vector<FormattedExample> probe;
    const size_t want = std::min(static_cast<size_t>(count), eval_split.size());
    probe.reserve(want);
    for (size_t round = 0; probe.size() < want; ++round) {
        bool any = false;
        for (const auto& [len, idxs] : by_length) {
            if (round < idxs.size()) {
                any = true;
                probe.push_back(eval_split[idxs[round]]);
                if (probe.size() >= want) break;
            }
        }
        if (!any) break;
    }
    return probe;
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_metrics_csv: cannot open " + path);
    std::vector<MetricRow> rows;
    std::string line;
    if (!std::getline(f, line)) return rows;
    if (line != "step,split,length,accuracy,loss") throw FormatError("read_metrics_csv: unexpected header");
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        MetricRow r;
        char split[32] = {0};
        long long step = 0;
        if (std::sscanf(line.c_str(), "%lld,%31[^,],%d,%lf,%lf", &step, split, &r.length, &r.accuracy, &r.loss) !=
            5) {
            throw FormatError("read_metrics_csv: bad row: " + line);
        }
        r.step = step;
        r.split = split;
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct RunLog {
    std::ofstream f;

    explicit RunLog(const std::string& path) : f(path, std::ios::app | std::ios::binary) {}

    void line(const std::string& msg) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::gmtime(&tt));
        f << stamp << " " << msg << "\n";
        f.flush();
    }
};

// finds the highest step-N.ckpt with N <= limit; returns -1 when none
int64_t latest_checkpoint_step(const std::string& dir, int64_t limit) {
    int64_t best = -1;
    if (!std::filesystem::is_directory(dir)) return best;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        long long n = -1;
        if (std::sscanf(name.c_str(), "step-%lld.ckpt", &n) == 1 && n >= 0 && n <= limit) {
            best = std::max<int64_t>(best, n);
        }
    }
    return best;
}

std::string fmt_metric_row(const MetricRow& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%lld,%s,%d,%.9f,%.9f\n", static_cast<long long>(r.step), r.split.c_str(),
                  r.length, r.accuracy, r.loss);
    return buf;
}

}  // namespace

RunRecord train_run(const std::string& run_dir, const TrainConfig& tc, const ModelConfig& mc,
                    const std::vector<FormattedExample>& train_split,
                    const std::vector<FormattedExample>& eval_split) {
    if (tc.batch_size < 1) throw ConfigError("train_run: batch_size must be >= 1");
    if (tc.eval_every < 1) throw ConfigError("train_run: eval_every must be >= 1");
    const int64_t total_steps = tc.total_steps();
    if (total_steps > 0 && train_split.empty()) throw ConfigError("train_run: empty train split");

    const std::string ckpt_dir = run_dir + "/checkpoints";
    std::filesystem::create_directories(ckpt_dir);
    RunLog log(run_dir + "/log.txt");

    TransformerWeights<float> w = TransformerWeights<float>::zeros(mc);
    AdamState<float> opt;
    int64_t start_step = latest_checkpoint_step(ckpt_dir, total_steps);
    if (start_step >= 0) {
        char name[64];
        std::snprintf(name, sizeof name, "/step-%lld.ckpt", static_cast<long long>(start_step));
        CheckpointData data = load_checkpoint(ckpt_dir + name);
        if (!data.has_opt && start_step > 0) {
            throw FormatError("train_run: checkpoint at step " + std::to_string(start_step) +
                              " lacks optimizer state; cannot resume");
        }
        w = std::move(data.weights);
        opt = data.has_opt ? std::move(data.opt) : AdamState<float>::like(w.params());
        log.line("resumed from step " + std::to_string(start_step));
    } else {
        w = TransformerWeights<float>::init(mc);
        opt = AdamState<float>::like(w.params());
        start_step = 0;
        log.line("initialized model (" + std::to_string(param_count(w.params())) + " params)");
    }

    const std::string metrics_path = run_dir + "/metrics.csv";
    const bool fresh = start_step == 0;
    std::ofstream metrics(metrics_path, (fresh ? std::ios::trunc : std::ios::app) | std::ios::binary);
    if (!metrics) throw std::runtime_error("train_run: cannot open " + metrics_path);
    if (fresh) metrics << "step,split,length,accuracy,loss\n";

    RunRecord rec;
    const auto t_begin = std::chrono::steady_clock::now();

    // fixed held-out probe: round-robin over lengths, plus per-length loss batches
    const std::vector<FormattedExample> probe = probe_subset(eval_split, tc.probe_examples);
    std::map<int, std::vector<const FormattedExample*>> probe_by_len;
    for (const auto& ex : probe) probe_by_len[ex.length].push_back(&ex);

    const LrSchedule sched{tc.base_lr, tc.warmup_steps};
    const AdamConfig adam_cfg;
    const int pad = 0;

    // train-window running stats since the previous eval point
    double train_loss_weighted = 0.0;
    long train_hits = 0, train_rows = 0;

    auto emit = [&](const MetricRow& r) {
        metrics << fmt_metric_row(r);
        rec.rows.push_back(r);
    };

    auto eval_point = [&](int64_t step) {
        const auto factory = model_predictor_factory(w);
        double ex_sum = 0.0;
        double loss_sum = 0.0;
        long rows_sum = 0, n_sum = 0;
        for (const auto& [len, exs] : probe_by_len) {
            std::vector<FormattedExample> group;
            group.reserve(exs.size());
            for (const auto* e : exs) group.push_back(*e);
            const ScoreSummary s = score_examples(factory, group);
            // teacher-forced loss over this length's probe examples
            Tape<float> tape;
            const Batch b = assemble_batch(exs, pad, mc.pos == PosScheme::learned ? mc.max_seq_len : 0);
            ForwardOpts<float> opts;
            opts.loss_targets = &b.targets;
            opts.loss_mask = &b.loss_mask;
            auto outp = forward_model(tape, w, b.view(), opts);
            const double loss = static_cast<double>(outp.loss.scalar());
            long rows = 0;
            for (const auto m : b.loss_mask) rows += m ? 1 : 0;
            emit({step, "heldout", len, s.exact, loss});
            ex_sum += s.exact * static_cast<double>(exs.size());
            loss_sum += loss * static_cast<double>(rows);
            rows_sum += rows;
            n_sum += static_cast<long>(exs.size());
        }
        if (n_sum > 0) {
            emit({step, "heldout", 0, ex_sum / static_cast<double>(n_sum),
                  rows_sum > 0 ? loss_sum / static_cast<double>(rows_sum) : 0.0});
        }
        if (train_rows > 0) {
            emit({step, "train", 0, static_cast<double>(train_hits) / static_cast<double>(train_rows),
                  train_loss_weighted / static_cast<double>(train_rows)});
            train_loss_weighted = 0.0;
            train_hits = train_rows = 0;
        }
        metrics.flush();
        log.line("eval at step " + std::to_string(step));
    };

    auto save_at = [&](int64_t step) {
        char name[64];
        std::snprintf(name, sizeof name, "/step-%lld.ckpt", static_cast<long long>(step));
        const std::string path = ckpt_dir + name;
        save_checkpoint(path, w, tc.save_optimizer ? &opt : nullptr);
        rec.checkpoint_paths.push_back(path);
        rec.final_checkpoint = path;
        log.line("checkpoint " + path);
    };

    if (fresh && !probe.empty()) eval_point(0);

    for (int64_t step = start_step + 1; step <= total_steps; ++step) {
        const auto idx = sample_batch_indices(tc.seed, step, train_split.size(), tc.batch_size);
        std::vector<const FormattedExample*> chosen;
        chosen.reserve(idx.size());
        for (const size_t i : idx) chosen.push_back(&train_split[i]);
        const Batch b = assemble_batch(chosen, pad, mc.pos == PosScheme::learned ? mc.max_seq_len : 0);

        Tape<float> tape;
        CeStats stats;
        ForwardOpts<float> opts;
        opts.loss_targets = &b.targets;
        opts.loss_mask = &b.loss_mask;
        opts.ce_stats = &stats;
        zero_grads(w.params());
        auto outp = forward_model(tape, w, b.view(), opts);
        const double loss = static_cast<double>(outp.loss.scalar());
        tape.backward(outp.loss);
        const double gnorm =
            tc.clip_norm > 0.0 ? clip_grad_norm(w.params(), tc.clip_norm) : global_grad_norm(w.params());
        const double lr = lr_at(sched, static_cast<long>(step));

        if (!std::isfinite(loss) || !std::isfinite(gnorm)) {
            metrics.flush();
            char diag[160];
            std::snprintf(diag, sizeof diag, "divergence at step %lld: loss=%g lr=%g grad_norm=%g",
                          static_cast<long long>(step), loss, lr, gnorm);
            log.line(diag);
            throw TrainDivergence(diag);
        }

        adam_update(w.params(), opt, adam_cfg, static_cast<float>(lr));
        train_loss_weighted += loss * static_cast<double>(stats.token_total);
        train_hits += stats.token_hits;
        train_rows += stats.token_total;
        rec.steps_run += 1;

        const bool at_eval = step % tc.eval_every == 0 || step == total_steps;
        if (at_eval && !probe.empty()) eval_point(step);
        if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0 && step != total_steps) save_at(step);
    }
    metrics.flush();
    save_at(total_steps);

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    char done[96];
    std::snprintf(done, sizeof done, "run complete: %lld steps in %.1fs", static_cast<long long>(rec.steps_run),
                  rec.wall_seconds);
    log.line(done);
    return rec;
}

}  // namespace scratchbench
