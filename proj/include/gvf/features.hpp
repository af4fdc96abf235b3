#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gvf/tensor.hpp"
#include "gvf/video.hpp"

namespace gvf {

// Per-frame spectral summary. `log_magnitude` is DC-centered log(1+|F|).
struct SpectrumProfile {
    Tensor log_magnitude;                 // [H,W]
    std::vector<double> radial_energy;    // n bins, sums to total spectral energy
    double hf_ratio = 0.0;                // energy outside cutoff / non-DC energy
};

struct MotionStats {
    // Per frame pair: block displacement vectors (dy,dx), flattened grids.
    std::vector<std::vector<std::pair<int, int>>> fields;
    std::vector<double> mean_magnitude_per_pair;
    double mean_magnitude = 0.0;
    double magnitude_temporal_variance = 0.0;
};

struct FeatureConfig {
    std::size_t radial_bins = 8;
    double hf_cutoff = 0.5;        // fraction of the Nyquist radius
    std::size_t block_size = 8;
    std::size_t search_radius = 3;
    std::size_t motion_moments = 4;
};

// DC-centered log-magnitude spectrum of a single-channel frame.
Tensor frame_spectrum(const Tensor& frame_hw);

// Radial energy histogram over squared magnitudes of a raw (uncentered) DFT.
std::vector<double> radial_energy_histogram(const Tensor& frame_hw, std::size_t bins);

// Energy outside `cutoff_fraction` of the Nyquist radius over total non-DC
// energy; 0 for a constant frame.
double hf_energy_ratio(const Tensor& frame_hw, double cutoff_fraction);

// Unbiased variance across frames of the per-frame HF ratio. Needs T >= 2.
double temporal_hf_dispersion(const VideoTensor& video, double cutoff_fraction);

// Integer block-matching displacements minimizing SAD within the search
// radius; ties broken by smallest magnitude, then row-major scan order.
std::vector<std::pair<int, int>> block_motion_field(const Tensor& frame_a_hw,
                                                    const Tensor& frame_b_hw,
                                                    std::size_t block_size,
                                                    std::size_t search_radius);

MotionStats motion_stats(const VideoTensor& video, const FeatureConfig& cfg);

// Per-video motion descriptor fed to PCA: mean |v| per frame pair.
std::vector<double> motion_descriptor(const VideoTensor& video, const FeatureConfig& cfg);

SpectrumProfile spectrum_profile(const Tensor& frame_chw, const FeatureConfig& cfg);

// Fixed-order concatenation; see feature_index_map for the layout.
std::vector<double> extract_feature_vector(const VideoTensor& video,
                                           const FeatureConfig& cfg);
std::vector<std::string> feature_index_map(const FeatureConfig& cfg);
std::size_t feature_vector_length(const FeatureConfig& cfg);

}  // namespace gvf
