#include "scratchbench/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scratchbench/rowmath.hpp"
#include "scratchbench/svgplot.hpp"
#include "scratchbench/tensor.hpp"

namespace scratchbench {

AttributionMap grad_x_input_map(TransformerWeights<float>& w, const FormattedExample& completed,
                                const Vocab& vocab) {
    const int total = static_cast<int>(completed.tokens.size());
    std::vector<int> targets;
    for (int j = 0; j < total; ++j) {
        if (completed.target_mask[static_cast<size_t>(j)]) targets.push_back(j);
    }
    if (targets.empty()) throw std::invalid_argument("grad_x_input_map: example has no target positions");

    AttributionMap map;
    map.rows = total;
    map.cols = static_cast<int>(targets.size());
    map.signed_sum.assign(static_cast<size_t>(total) * targets.size(), 0.0);
    map.l2.assign(static_cast<size_t>(total) * targets.size(), 0.0);
    map.col_positions = targets;
    map.row_labels.reserve(static_cast<size_t>(total));
    for (const int t : completed.tokens) map.row_labels.push_back(vocab.str(t));

    const int len = total;
    const BatchView batch{completed.tokens.data(), &len, 1, total};

    for (int c = 0; c < map.cols; ++c) {
        const int pos = targets[static_cast<size_t>(c)];  // logits row pos-1 emits this token
        Tape<float> tape;
        ForwardOpts<float> opts;
        opts.want_logits = true;
        zero_grads(w.params());
        auto out = forward_model(tape, w, batch, opts);
        const int row = pos - 1;
        const int pred = rowm::argmax_row(out.logits.data() + static_cast<size_t>(row) * out.logits.cols(),
                                          out.logits.cols());
        auto scalar = tape.select(out.logits, row, pred);
        tape.backward(scalar);

        const int d = out.x_embed.cols();
        for (int r = 0; r < total; ++r) {
            const float* g = out.x_embed.grad_data() + static_cast<size_t>(r) * d;
            const float* x = out.x_embed.data() + static_cast<size_t>(r) * d;
            double dot = 0.0, sq = 0.0;
            for (int k = 0; k < d; ++k) {
                const double p = static_cast<double>(g[k]) * static_cast<double>(x[k]);
                dot += p;
                sq += p * p;
            }
            map.signed_sum[static_cast<size_t>(r) * map.cols + c] = std::fabs(dot);
            map.l2[static_cast<size_t>(r) * map.cols + c] = std::sqrt(sq);
        }
    }

    for (auto* mat : {&map.signed_sum, &map.l2}) {
        for (int c = 0; c < map.cols; ++c) {
            double mx = 0.0;
            for (int r = 0; r < map.rows; ++r) mx = std::max(mx, (*mat)[static_cast<size_t>(r) * map.cols + c]);
            if (mx > 0.0) {
                for (int r = 0; r < map.rows; ++r) (*mat)[static_cast<size_t>(r) * map.cols + c] /= mx;
            }
        }
    }
    return map;
}

void write_attribution_csv(const std::string& path, const std::vector<std::string>& row_labels,
                           const std::vector<double>& matrix, int rows, int cols) {
    if (static_cast<size_t>(rows) * cols != matrix.size() || row_labels.size() != static_cast<size_t>(rows)) {
        throw FormatError("write_attribution_csv: shape mismatch");
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_attribution_csv: cannot open " + path);
    f << "token";
    for (int c = 0; c < cols; ++c) f << ",t" << c;
    f << '\n';
    char buf[32];
    for (int r = 0; r < rows; ++r) {
        f << row_labels[static_cast<size_t>(r)];
        for (int c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof buf, ",%.8f", matrix[static_cast<size_t>(r) * cols + c]);
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("write_attribution_csv: write failed for " + path);
}

AttributionCsv read_attribution_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_attribution_csv: cannot open " + path);
    AttributionCsv out;
    std::string line;
    if (!std::getline(f, line)) throw FormatError("read_attribution_csv: empty file");
    out.cols = static_cast<int>(std::count(line.begin(), line.end(), ','));
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) throw FormatError("read_attribution_csv: bad row");
        out.row_labels.push_back(cell);
        int got = 0;
        while (std::getline(row, cell, ',')) {
            out.matrix.push_back(std::stod(cell));
            ++got;
        }
        if (got != out.cols) throw FormatError("read_attribution_csv: ragged row in " + path);
        ++out.rows;
    }
    return out;
}

namespace {

void write_pgm(const std::string& path, const std::vector<double>& matrix, int rows, int cols) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
    f << "P2\n" << cols << ' ' << rows << "\n255\n";
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = matrix[static_cast<size_t>(r) * cols + c];
            const int gray = 255 - static_cast<int>(std::lround(255.0 * std::min(1.0, std::max(0.0, v))));
            f << gray << (c + 1 == cols ? '\n' : ' ');
        }
    }
    if (!f) throw std::runtime_error("write_pgm: write failed for " + path);
}

}  // namespace

void export_heatmap(const AttributionMap& map, const std::string& stem) {
    write_attribution_csv(stem + ".csv", map.row_labels, map.signed_sum, map.rows, map.cols);
    write_attribution_csv(stem + "_l2.csv", map.row_labels, map.l2, map.rows, map.cols);
    write_pgm(stem + ".pgm", map.signed_sum, map.rows, map.cols);
    HeatmapSpec spec;
    spec.title = "gradient x input (column-normalized)";
    spec.col_title = "output step";
    write_heatmap_svg(stem + ".svg", map.signed_sum, map.rows, map.cols, map.row_labels, spec);
}

}  // namespace scratchbench
