#include "gvf/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gvf/fft.hpp"

namespace gvf {

namespace {

double sqr(double x) { return x * x; }

// Centered frequency coordinate for index i of an extent-n axis.
double centered_freq(std::size_t i, std::size_t n) {
    double f = static_cast<double>(i);
    if (f > static_cast<double>(n) / 2.0) f -= static_cast<double>(n);
    return f;
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double v : xs) acc += sqr(v - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double sample_var(const std::vector<double>& xs) {
    double s = sample_std(xs);
    return s * s;
}

}  // namespace

Tensor frame_spectrum(const Tensor& frame_hw) {
    if (frame_hw.rank() != 2) throw std::invalid_argument("frame_spectrum: expected [H,W]");
    const std::size_t H = frame_hw.extent(0), W = frame_hw.extent(1);
    auto spec = dft2d(frame_hw);
    Tensor out({H, W});
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
            // DC-centered layout
            std::size_t sh = (h + H / 2) % H;
            std::size_t sw = (w + W / 2) % W;
            out.at2(sh, sw) = std::log1p(std::abs(spec[h * W + w]));
        }
    return out;
}

std::vector<double> radial_energy_histogram(const Tensor& frame_hw, std::size_t bins) {
    const std::size_t H = frame_hw.extent(0), W = frame_hw.extent(1);
    auto spec = dft2d(frame_hw);
    const double rmax =
        std::sqrt(sqr(static_cast<double>(H) / 2.0) + sqr(static_cast<double>(W) / 2.0));
    std::vector<double> hist(bins, 0.0);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
            double r = std::sqrt(sqr(centered_freq(h, H)) + sqr(centered_freq(w, W)));
            std::size_t bin = std::min(
                bins - 1, static_cast<std::size_t>(r / rmax * static_cast<double>(bins)));
            hist[bin] += sqr(std::abs(spec[h * W + w]));
        }
    return hist;
}

double hf_energy_ratio(const Tensor& frame_hw, double cutoff_fraction) {
    if (cutoff_fraction <= 0.0 || cutoff_fraction >= 1.0)
        throw std::invalid_argument("hf_energy_ratio: cutoff must be in (0,1)");
    const std::size_t H = frame_hw.extent(0), W = frame_hw.extent(1);
    auto spec = dft2d(frame_hw);
    const double nyquist = static_cast<double>(std::min(H, W)) / 2.0;
    const double cutoff = cutoff_fraction * nyquist;
    double outside = 0.0, total = 0.0;
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
            if (h == 0 && w == 0) continue;  // DC excluded
            double e = sqr(std::abs(spec[h * W + w]));
            double r = std::sqrt(sqr(centered_freq(h, H)) + sqr(centered_freq(w, W)));
            total += e;
            if (r > cutoff) outside += e;
        }
    return total == 0.0 ? 0.0 : outside / total;
}

double temporal_hf_dispersion(const VideoTensor& video, double cutoff_fraction) {
    if (video.frames() < 2)
        throw std::invalid_argument("temporal_hf_dispersion: need at least 2 frames");
    std::vector<double> ratios;
    ratios.reserve(video.frames());
    for (std::size_t t = 0; t < video.frames(); ++t)
        ratios.push_back(hf_energy_ratio(to_luma(video.frame(t)), cutoff_fraction));
    return sample_var(ratios);
}

std::vector<std::pair<int, int>> block_motion_field(const Tensor& a, const Tensor& b,
                                                    std::size_t block_size,
                                                    std::size_t search_radius) {
    if (!a.same_shape(b))
        throw std::invalid_argument("block_motion_field: frame shape mismatch");
    const std::size_t H = a.extent(0), W = a.extent(1);
    const long R = static_cast<long>(search_radius);
    std::vector<std::pair<int, int>> field;

    auto clamped = [&](const Tensor& img, long h, long w) {
        h = std::clamp<long>(h, 0, static_cast<long>(H) - 1);
        w = std::clamp<long>(w, 0, static_cast<long>(W) - 1);
        return img.at2(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
    };

    for (std::size_t bh = 0; bh < H; bh += block_size)
        for (std::size_t bw = 0; bw < W; bw += block_size) {
            std::size_t h_end = std::min(H, bh + block_size);
            std::size_t w_end = std::min(W, bw + block_size);
            double best_sad = 0.0;
            long best_mag2 = 0;
            int best_dy = 0, best_dx = 0;
            bool first = true;
            for (long dy = -R; dy <= R; ++dy)
                for (long dx = -R; dx <= R; ++dx) {
                    double sad = 0.0;
                    for (std::size_t h = bh; h < h_end; ++h)
                        for (std::size_t w = bw; w < w_end; ++w)
                            sad += std::fabs(a.at2(h, w) -
                                             clamped(b, static_cast<long>(h) + dy,
                                                     static_cast<long>(w) + dx));
                    long mag2 = dy * dy + dx * dx;
                    if (first || sad < best_sad ||
                        (sad == best_sad && mag2 < best_mag2)) {
                        best_sad = sad;
                        best_mag2 = mag2;
                        best_dy = static_cast<int>(dy);
                        best_dx = static_cast<int>(dx);
                        first = false;
                    }
                }
            field.emplace_back(best_dy, best_dx);
        }
    return field;
}

MotionStats motion_stats(const VideoTensor& video, const FeatureConfig& cfg) {
    MotionStats stats;
    if (video.frames() < 2) return stats;
    for (std::size_t t = 0; t + 1 < video.frames(); ++t) {
        auto field = block_motion_field(to_luma(video.frame(t)), to_luma(video.frame(t + 1)),
                                        cfg.block_size, cfg.search_radius);
        double mean_mag = 0.0;
        for (const auto& [dy, dx] : field)
            mean_mag += std::sqrt(static_cast<double>(dy * dy + dx * dx));
        mean_mag /= static_cast<double>(field.size());
        stats.mean_magnitude_per_pair.push_back(mean_mag);
        stats.fields.push_back(std::move(field));
    }
    for (double m : stats.mean_magnitude_per_pair) stats.mean_magnitude += m;
    stats.mean_magnitude /= static_cast<double>(stats.mean_magnitude_per_pair.size());
    stats.magnitude_temporal_variance = sample_var(stats.mean_magnitude_per_pair);
    return stats;
}

std::vector<double> motion_descriptor(const VideoTensor& video, const FeatureConfig& cfg) {
    return motion_stats(video, cfg).mean_magnitude_per_pair;
}

SpectrumProfile spectrum_profile(const Tensor& frame_chw, const FeatureConfig& cfg) {
    Tensor luma = to_luma(frame_chw);
    SpectrumProfile p;
    p.log_magnitude = frame_spectrum(luma);
    p.radial_energy = radial_energy_histogram(luma, cfg.radial_bins);
    p.hf_ratio = hf_energy_ratio(luma, cfg.hf_cutoff);
    return p;
}

std::size_t feature_vector_length(const FeatureConfig& cfg) {
    return cfg.radial_bins * 2 + 5 + cfg.motion_moments;
}

std::vector<std::string> feature_index_map(const FeatureConfig& cfg) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cfg.radial_bins; ++i)
        names.push_back("radial_mean_" + std::to_string(i));
    for (std::size_t i = 0; i < cfg.radial_bins; ++i)
        names.push_back("radial_std_" + std::to_string(i));
    names.push_back("hf_ratio_mean");
    names.push_back("hf_ratio_std");
    names.push_back("temporal_hf_dispersion");
    names.push_back("motion_mean");
    names.push_back("motion_variance");
    for (std::size_t i = 0; i < cfg.motion_moments; ++i)
        names.push_back("motion_moment_" + std::to_string(i + 1));
    return names;
}

std::vector<double> extract_feature_vector(const VideoTensor& video,
                                           const FeatureConfig& cfg) {
    if (video.frames() < 2)
        throw std::invalid_argument("extract_feature_vector: need at least 2 frames");
    const std::size_t T = video.frames();

    // Per-frame normalized radial profiles and HF ratios.
    std::vector<std::vector<double>> profiles(cfg.radial_bins);
    std::vector<double> hf_ratios;
    for (std::size_t t = 0; t < T; ++t) {
        Tensor luma = to_luma(video.frame(t));
        auto hist = radial_energy_histogram(luma, cfg.radial_bins);
        double total = 0.0;
        for (double e : hist) total += e;
        for (std::size_t b = 0; b < cfg.radial_bins; ++b)
            profiles[b].push_back(total == 0.0 ? 0.0 : hist[b] / total);
        hf_ratios.push_back(hf_energy_ratio(luma, cfg.hf_cutoff));
    }

    std::vector<double> out;
    out.reserve(feature_vector_length(cfg));
    for (std::size_t b = 0; b < cfg.radial_bins; ++b) {
        double mean = 0.0;
        for (double v : profiles[b]) mean += v;
        out.push_back(mean / static_cast<double>(T));
    }
    for (std::size_t b = 0; b < cfg.radial_bins; ++b) out.push_back(sample_std(profiles[b]));

    double hf_mean = 0.0;
    for (double v : hf_ratios) hf_mean += v;
    hf_mean /= static_cast<double>(T);
    out.push_back(hf_mean);
    out.push_back(sample_std(hf_ratios));
    out.push_back(sample_var(hf_ratios));  // temporal HF dispersion

    MotionStats ms = motion_stats(video, cfg);
    out.push_back(ms.mean_magnitude);
    out.push_back(ms.magnitude_temporal_variance);
    for (std::size_t m = 1; m <= cfg.motion_moments; ++m) {
        double acc = 0.0;
        for (double v : ms.mean_magnitude_per_pair) acc += std::pow(v, static_cast<double>(m));
        out.push_back(acc / static_cast<double>(ms.mean_magnitude_per_pair.size()));
    }
    return out;
}

}  // namespace gvf
