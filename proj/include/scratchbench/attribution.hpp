#pragma once

// Gradient×input attribution over the context window.
//
// For each target position, the predicted (argmax) token's pre-softmax logit
// is differentiated with respect to the model's input embedding rows; each
// context position's score aggregates grad ⊙ embedding over the embedding
// dimension two ways: |signed sum| (the primary map) and the L2 norm of the
// elementwise product (emitted alongside for comparison). Columns are then
// max-normalized so each column's peak is 1 (all-zero columns stay zero).

#include <string>
#include <vector>

#include "scratchbench/model.hpp"
#include "scratchbench/tasks.hpp"

namespace scratchbench {

struct AttributionMap {
    int rows = 0;  // context positions (full completed sequence)
    int cols = 0;  // target steps, in emit order
    std::vector<double> signed_sum;        // rows × cols, column-normalized
    std::vector<double> l2;                // rows × cols, column-normalized
    std::vector<std::string> row_labels;   // token strings
    std::vector<int> col_positions;        // context position of each target
    std::string normalization = "per-column-max";

    double at(int r, int c) const { return signed_sum[static_cast<size_t>(r) * cols + c]; }
};

// `completed` carries the full context (targets filled via env-forced decode
// or ground truth) plus the target mask marking the columns.
AttributionMap grad_x_input_map(TransformerWeights<float>& w, const FormattedExample& completed,
                                const Vocab& vocab);

// attribution.csv (+ _l2), attribution.pgm, attribution.svg under `stem`'s
// directory: stem + ".csv" / "_l2.csv" / ".pgm" / ".svg"
void export_heatmap(const AttributionMap& map, const std::string& stem);

// CSV round-trip (row labels + signed map); throws FormatError on shape issues
void write_attribution_csv(const std::string& path, const std::vector<std::string>& row_labels,
                           const std::vector<double>& matrix, int rows, int cols);
struct AttributionCsv {
    std::vector<std::string> row_labels;
    std::vector<double> matrix;
    int rows = 0, cols = 0;
};
AttributionCsv read_attribution_csv(const std::string& path);

}  // namespace scratchbench
