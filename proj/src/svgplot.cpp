#include "scratchbench/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scratchbench {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// largest "nice" tick step (1/2/5 × 10^k) giving at most max_ticks intervals
double nice_step(double span, int max_ticks) {
    if (span <= 0) return 1.0;
    const double raw = span / max_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (const double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) return mag * m;
    }
    return mag * 10.0;
}

}  // namespace

void write_line_svg(const std::string& path, const std::vector<Series>& series, const LinePlotSpec& spec) {
    if (series.empty()) throw std::invalid_argument("write_line_svg: no series");
    double x_min = 0.0, x_max = 1.0;
    bool first = true;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("write_line_svg: x/y size mismatch");
        for (const double x : s.x) {
            x_min = first ? x : std::min(x_min, x);
            x_max = first ? x : std::max(x_max, x);
            first = false;
        }
    }
    if (first) throw std::invalid_argument("write_line_svg: all series empty");
    if (x_max <= x_min) x_max = x_min + 1.0;
    const double y_min = spec.y_min, y_max = spec.y_max > spec.y_min ? spec.y_max : spec.y_min + 1.0;

    const double ml = 58, mr = 16, mt = 34, mb = 46;
    const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return mt + (1.0 - (y - y_min) / (y_max - y_min)) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!spec.title.empty()) {
        svg << "<text x=\"" << spec.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"14\">"
            << xml_escape(spec.title) << "</text>\n";
    }
    if (spec.shade_x0 < spec.shade_x1) {
        const double sx0 = std::max(spec.shade_x0, x_min), sx1 = std::min(spec.shade_x1, x_max);
        if (sx0 < sx1) {
            svg << "<rect x=\"" << num(px(sx0)) << "\" y=\"" << num(mt) << "\" width=\"" << num(px(sx1) - px(sx0))
                << "\" height=\"" << num(ph) << "\" fill=\"#c8d8ee\" fill-opacity=\"0.55\"/>\n";
        }
    }

    // axes + ticks
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    const double xstep = nice_step(x_max - x_min, 8), ystep = nice_step(y_max - y_min, 5);
    for (double x = std::ceil(x_min / xstep) * xstep; x <= x_max + 1e-9; x += xstep) {
        svg << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(mt + ph) << "\" x2=\"" << num(px(x)) << "\" y2=\""
            << num(mt + ph + 4) << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << num(px(x)) << "\" y=\"" << num(mt + ph + 16) << "\" text-anchor=\"middle\">"
            << (std::fabs(x - std::round(x)) < 1e-9 ? std::to_string(static_cast<long>(std::llround(x))) : num(x))
            << "</text>\n";
        svg << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(px(x)) << "\" y2=\""
            << num(mt + ph) << "\" stroke=\"#eee\"/>\n";
    }
    for (double y = std::ceil(y_min / ystep) * ystep; y <= y_max + 1e-9; y += ystep) {
        svg << "<line x1=\"" << num(ml - 4) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(ml) << "\" y2=\""
            << num(py(y)) << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
            << "</text>\n";
        svg << "<line x1=\"" << num(ml) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(ml + pw) << "\" y2=\""
            << num(py(y)) << "\" stroke=\"#eee\"/>\n";
    }
    svg << "</g>\n";
    svg << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    if (!spec.x_label.empty()) {
        svg << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(spec.height - 10.0)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(spec.x_label)
            << "</text>\n";
    }
    if (!spec.y_label.empty()) {
        svg << "<text x=\"14\" y=\"" << num(mt + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"12\" transform=\"rotate(-90 14 "
            << num(mt + ph / 2) << ")\">" << xml_escape(spec.y_label) << "</text>\n";
    }

    for (size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        if (s.x.empty()) continue;
        const std::string color = s.color.empty() ? kPalette[i % kPaletteSize] : s.color;
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (size_t j = 0; j < s.x.size(); ++j) {
            const double yv = std::min(y_max, std::max(y_min, s.y[j]));
            svg << num(px(s.x[j])) << ',' << num(py(yv)) << ' ';
        }
        svg << "\"/>\n";
        for (size_t j = 0; j < s.x.size(); ++j) {
            const double yv = std::min(y_max, std::max(y_min, s.y[j]));
            svg << "<circle cx=\"" << num(px(s.x[j])) << "\" cy=\"" << num(py(yv)) << "\" r=\"2.2\" fill=\"" << color
                << "\"/>\n";
        }
    }

    // legend, top-right inside the plot frame
    const double lx = ml + pw - 190, ly0 = mt + 10;
    svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect x=\"" << num(lx - 8) << "\" y=\"" << num(ly0 - 12) << "\" width=\"196\" height=\""
        << num(series.size() * 16.0 + 10) << "\" fill=\"white\" fill-opacity=\"0.85\" stroke=\"#999\"/>\n";
    for (size_t i = 0; i < series.size(); ++i) {
        const double ly = ly0 + static_cast<double>(i) * 16.0;
        const std::string color = series[i].color.empty() ? kPalette[i % kPaletteSize] : series[i].color;
        svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22) << "\" y2=\""
            << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2.2\"/>\n";
        svg << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(series[i].label)
            << "</text>\n";
    }
    svg << "</g>\n</svg>\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_line_svg: cannot open " + path);
    f << svg.str();
    if (!f) throw std::runtime_error("write_line_svg: write failed for " + path);
}

void write_heatmap_svg(const std::string& path, const std::vector<double>& matrix, int rows, int cols,
                       const std::vector<std::string>& row_labels, const HeatmapSpec& spec) {
    if (rows < 1 || cols < 1 || matrix.size() != static_cast<size_t>(rows) * cols) {
        throw std::invalid_argument("write_heatmap_svg: bad shape");
    }
    const double cw = std::max(4.0, std::min(14.0, 760.0 / cols));
    const double ch = std::max(4.0, std::min(14.0, 900.0 / rows));
    const double ml = 70, mt = 40, mr = 14, mb = 18;
    const double w = ml + cols * cw + mr, h = mt + rows * ch + mb;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
        << "\" viewBox=\"0 0 " << num(w) << " " << num(h) << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!spec.title.empty()) {
        svg << "<text x=\"" << num(w / 2) << "\" y=\"16\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"13\">"
            << xml_escape(spec.title) << "</text>\n";
    }
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = std::min(1.0, std::max(0.0, matrix[static_cast<size_t>(r) * cols + c]));
            const int gray = 255 - static_cast<int>(std::lround(v * 255.0));
            svg << "<rect x=\"" << num(ml + c * cw) << "\" y=\"" << num(mt + r * ch) << "\" width=\"" << num(cw)
                << "\" height=\"" << num(ch) << "\" fill=\"rgb(" << gray << ',' << gray << ',' << gray << ")\"/>\n";
        }
    }
    // row labels: skip enough rows that text keeps >= 8px pitch
    const int rskip = std::max(1, static_cast<int>(std::ceil(8.0 / ch)));
    svg << "<g font-family=\"monospace\" font-size=\"8\" fill=\"#222\">\n";
    for (int r = 0; r < rows; r += rskip) {
        const std::string label = r < static_cast<int>(row_labels.size()) ? row_labels[static_cast<size_t>(r)] : "";
        svg << "<text x=\"" << num(ml - 4) << "\" y=\"" << num(mt + r * ch + ch * 0.5 + 2.5)
            << "\" text-anchor=\"end\">" << xml_escape(label) << "</text>\n";
    }
    const int cskip = std::max(1, static_cast<int>(std::ceil(16.0 / cw)));
    for (int c = 0; c < cols; c += cskip) {
        svg << "<text x=\"" << num(ml + c * cw + cw * 0.5) << "\" y=\"" << num(mt - 4)
            << "\" text-anchor=\"middle\">" << c << "</text>\n";
    }
    svg << "</g>\n";
    if (!spec.col_title.empty()) {
        svg << "<text x=\"" << num(ml + cols * cw / 2) << "\" y=\"" << num(mt - 22)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << xml_escape(spec.col_title) << "</text>\n";
    }
    svg << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(cols * cw) << "\" height=\""
        << num(rows * ch) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    svg << "</svg>\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_heatmap_svg: cannot open " + path);
    f << svg.str();
    if (!f) throw std::runtime_error("write_heatmap_svg: write failed for " + path);
}

}  // namespace scratchbench
