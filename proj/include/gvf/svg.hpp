#pragma once

#include <string>
#include <vector>

#include "gvf/tensor.hpp"

namespace gvf {

// Deterministic SVG emitters: pure functions of their inputs, fixed "%.6f"
// number formatting, no timestamps — identical inputs yield byte-identical
// documents.

// Grayscale heatmap of a [H,W] tensor, min-max scaled (a constant input
// renders mid-gray).
std::string svg_heatmap(const Tensor& values_hw, const std::string& title,
                        std::size_t cell_px = 8);

// One labelled group of 2-D points.
struct ScatterGroup {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool anchor = false;  // drawn with a distinct marker and flagged in metadata
};

// Scatter plot; axes auto-scaled over all groups. Exactly the groups with
// anchor=true carry class="anchor" in the output.
std::string svg_scatter(const std::vector<ScatterGroup>& groups, const std::string& title);

// Vertical bars on [0,1]; each bar's value is embedded verbatim as a
// data-value attribute so parse-back equals the input.
std::string svg_bars(const std::vector<std::string>& labels,
                     const std::vector<double>& values, const std::string& title);

// One polyline per series over implicit x = 0..n-1 (loss curves).
struct LineSeries {
    std::string label;
    std::vector<double> values;
};
std::string svg_lines(const std::vector<LineSeries>& series, const std::string& title);

// Values of the data-value attributes in document order (bar-chart
// parse-back check).
std::vector<double> svg_parse_bar_values(const std::string& svg);

}  // namespace gvf
