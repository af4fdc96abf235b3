#pragma once

#include <functional>
#include <vector>

#include "gvf/video.hpp"

namespace gvf {

// Pinned SSIM variant: 11x11 Gaussian window sigma=1.5, C1=(0.01*L)^2,
// C2=(0.03*L)^2 with L=1, mean over valid window positions. Frames are
// [H,W] luma (use to_luma for [C,H,W]). Throws when a frame is smaller
// than the window.
double ssim(const Tensor& frame_a, const Tensor& frame_b);

// 10*log10(1/MSE) on the [0,1] scale; returns +infinity when MSE == 0.
double psnr(const Tensor& frame_a, const Tensor& frame_b);

struct QualityReport {
    std::vector<double> ssim_per_frame;
    std::vector<double> psnr_per_frame;
    std::vector<double> proxy_per_frame;
    double ssim_mean = 0.0;
    double psnr_mean = 0.0;   // mean over finite entries; +inf if all infinite
    double proxy_mean = 0.0;
    std::size_t frame_count = 0;
};

using FrameDistance = std::function<double(const Tensor&, const Tensor&)>;

// Per-frame metrics plus means. `proxy` (e.g. the perceptual proxy) is
// optional; without it the proxy entries are zero. Frames are converted to
// luma before SSIM. Throws on mismatched frame counts or shapes.
QualityReport video_quality(const VideoTensor& a, const VideoTensor& b,
                            const FrameDistance& proxy = {});

}  // namespace gvf
