#include "gvf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace gvf {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(double w, double h, const std::string& title) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
                    "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
                    "\">\n";
    s += "<title>" + escape(title) + "</title>\n";
    s += "<rect width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"white\"/>\n";
    s += "<text x=\"8\" y=\"16\" font-family=\"monospace\" font-size=\"12\">" +
         escape(title) + "</text>\n";
    return s;
}

// Fixed qualitative palette, cycled per group/series.
const char* palette(std::size_t i) {
    static const char* colors[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad",
                                   "#d35400", "#16a085", "#7f8c8d", "#2c3e50"};
    return colors[i % 8];
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // Non-degenerate span for mapping.
    double span() const { return hi > lo ? hi - lo : 1.0; }
};

}  // namespace

std::string svg_heatmap(const Tensor& values_hw, const std::string& title,
                        std::size_t cell_px) {
    if (values_hw.rank() != 2)
        throw std::invalid_argument("svg_heatmap: expected a [H,W] tensor, got " +
                                    values_hw.shape_str());
    if (values_hw.size() == 0) throw std::invalid_argument("svg_heatmap: empty input");
    const std::size_t H = values_hw.extent(0), W = values_hw.extent(1);
    Range r;
    for (std::size_t i = 0; i < values_hw.size(); ++i) r.add(values_hw[i]);

    const double margin = 24.0;
    std::string s = header(W * cell_px + 2 * margin, H * cell_px + 2 * margin, title);
    for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
            double v = values_hw[y * W + x];
            double u = r.hi > r.lo ? (v - r.lo) / (r.hi - r.lo) : 0.5;
            int g = static_cast<int>(std::lround(u * 255.0));
            char color[16];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", g, g, g);
            s += "<rect x=\"" + num(margin + x * cell_px) + "\" y=\"" +
                 num(margin + y * cell_px) + "\" width=\"" + num(cell_px) + "\" height=\"" +
                 num(cell_px) + "\" fill=\"" + color + "\"/>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

std::string svg_scatter(const std::vector<ScatterGroup>& groups, const std::string& title) {
    if (groups.empty()) throw std::invalid_argument("svg_scatter: no groups");
    Range rx, ry;
    std::size_t total = 0;
    for (const auto& g : groups) {
        for (auto [x, y] : g.points) {
            rx.add(x);
            ry.add(y);
            ++total;
        }
    }
    if (total == 0) throw std::invalid_argument("svg_scatter: no points");

    const double W = 360, H = 300, margin = 36;
    auto mapx = [&](double x) { return margin + (x - rx.lo) / rx.span() * (W - 2 * margin); };
    auto mapy = [&](double y) {
        return H - margin - (y - ry.lo) / ry.span() * (H - 2 * margin);
    };
    std::string s = header(W, H, title);
    s += "<rect x=\"" + num(margin) + "\" y=\"" + num(margin) + "\" width=\"" +
         num(W - 2 * margin) + "\" height=\"" + num(H - 2 * margin) +
         "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        s += std::string("<g class=\"") + (g.anchor ? "anchor" : "group") +
             "\" data-label=\"" + escape(g.label) + "\">\n";
        for (auto [x, y] : g.points) {
            if (g.anchor) {
                // Anchor cluster: filled squares instead of circles.
                s += "<rect x=\"" + num(mapx(x) - 3) + "\" y=\"" + num(mapy(y) - 3) +
                     "\" width=\"6\" height=\"6\" fill=\"" + palette(gi) + "\"/>\n";
            } else {
                s += "<circle cx=\"" + num(mapx(x)) + "\" cy=\"" + num(mapy(y)) +
                     "\" r=\"3\" fill=\"" + palette(gi) + "\" fill-opacity=\"0.7\"/>\n";
            }
        }
        s += "</g>\n";
        s += "<text x=\"" + num(W - margin + 2) + "\" y=\"" + num(margin + 14.0 * gi + 10) +
             "\" font-family=\"monospace\" font-size=\"10\" fill=\"" + palette(gi) + "\">" +
             escape(g.label) + (g.anchor ? " *" : "") + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string svg_bars(const std::vector<std::string>& labels,
                     const std::vector<double>& values, const std::string& title) {
    if (labels.size() != values.size())
        throw std::invalid_argument("svg_bars: labels/values size mismatch");
    if (values.empty()) throw std::invalid_argument("svg_bars: no bars");
    const double barw = 48, gap = 16, margin = 36, H = 260;
    const double W = margin * 2 + values.size() * (barw + gap);
    std::string s = header(W, H, title);
    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = std::clamp(values[i], 0.0, 1.0);
        double x = margin + i * (barw + gap);
        double h = v * (H - 2 * margin);
        s += "<rect class=\"bar\" data-value=\"" + num(values[i]) + "\" x=\"" + num(x) +
             "\" y=\"" + num(H - margin - h) + "\" width=\"" + num(barw) + "\" height=\"" +
             num(h) + "\" fill=\"" + palette(i) + "\"/>\n";
        s += "<text x=\"" + num(x) + "\" y=\"" + num(H - margin + 14) +
             "\" font-family=\"monospace\" font-size=\"10\">" + escape(labels[i]) +
             "</text>\n";
        s += "<text x=\"" + num(x) + "\" y=\"" + num(H - margin - h - 4) +
             "\" font-family=\"monospace\" font-size=\"10\">" + num(values[i]) +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string svg_lines(const std::vector<LineSeries>& series, const std::string& title) {
    if (series.empty()) throw std::invalid_argument("svg_lines: no series");
    Range ry;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) ry.add(v);
    }
    if (n == 0) throw std::invalid_argument("svg_lines: all series empty");

    const double W = 420, H = 260, margin = 36;
    auto mapx = [&](double i) {
        return margin + (n > 1 ? i / (n - 1.0) : 0.5) * (W - 2 * margin);
    };
    auto mapy = [&](double v) {
        return H - margin - (v - ry.lo) / ry.span() * (H - 2 * margin);
    };
    std::string s = header(W, H, title);
    s += "<rect x=\"" + num(margin) + "\" y=\"" + num(margin) + "\" width=\"" +
         num(W - 2 * margin) + "\" height=\"" + num(H - 2 * margin) +
         "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& sr = series[si];
        if (sr.values.empty()) continue;
        std::string pts;
        for (std::size_t i = 0; i < sr.values.size(); ++i) {
            if (!pts.empty()) pts += " ";
            pts += num(mapx(static_cast<double>(i))) + "," + num(mapy(sr.values[i]));
        }
        s += "<polyline data-label=\"" + escape(sr.label) + "\" points=\"" + pts +
             "\" fill=\"none\" stroke=\"" + palette(si) + "\"/>\n";
        s += "<text x=\"" + num(W - margin + 2) + "\" y=\"" + num(margin + 14.0 * si + 10) +
             "\" font-family=\"monospace\" font-size=\"10\" fill=\"" + palette(si) + "\">" +
             escape(sr.label) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::vector<double> svg_parse_bar_values(const std::string& svg) {
    std::vector<double> out;
    const std::string key = "data-value=\"";
    std::size_t pos = 0;
    while ((pos = svg.find(key, pos)) != std::string::npos) {
        pos += key.size();
        std::size_t end = svg.find('"', pos);
        if (end == std::string::npos) break;
        out.push_back(std::stod(svg.substr(pos, end - pos)));
        pos = end;
    }
    return out;
}

}  // namespace gvf
