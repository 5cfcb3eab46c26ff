#pragma once

// Minimal self-contained SVG emitters: multi-series line plots with an
// optional shaded x-band (the training-length window) and a legend, plus
// grayscale heatmaps with row labels. No third-party plotting code; output
// is plain SVG 1.1 markup.

#include <string>
#include <vector>

namespace scratchbench {

struct Series {
    std::string label;
    std::string color;  // empty: take the next palette entry
    std::vector<double> x, y;
};

struct LinePlotSpec {
    std::string title, x_label, y_label;
    double shade_x0 = 0.0, shade_x1 = 0.0;  // shaded band when x0 < x1
    double y_min = 0.0, y_max = 1.0;
    int width = 760, height = 430;
};

void write_line_svg(const std::string& path, const std::vector<Series>& series, const LinePlotSpec& spec);

struct HeatmapSpec {
    std::string title, col_title;
};

// matrix is rows × cols in [0,1]; darker = larger
void write_heatmap_svg(const std::string& path, const std::vector<double>& matrix, int rows, int cols,
                       const std::vector<std::string>& row_labels, const HeatmapSpec& spec);

std::string xml_escape(const std::string& s);

}  // namespace scratchbench
