#pragma once

#include <cstddef>
#include <vector>

#include "gvf/tensor.hpp"

namespace gvf {

// Top-k principal axes of mean-centered points, descending eigenvalue order.
// Sign convention: in each axis the largest-magnitude component is positive.
struct PcaBasis {
    std::vector<double> mean;              // dimension d
    std::vector<std::vector<double>> axes; // k vectors of length d
    std::vector<double> eigenvalues;       // length k, descending
};

PcaBasis pca_fit(const std::vector<std::vector<double>>& points, std::size_t k);
std::vector<double> pca_project(const PcaBasis& basis, const std::vector<double>& point);

}  // namespace gvf
