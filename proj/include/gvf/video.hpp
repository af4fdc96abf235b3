#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gvf/tensor.hpp"

namespace gvf {

// T x C x H x W, values in [0,1]. C is 1 (gray) or 3 (RGB).
struct VideoTensor {
    Tensor data;  // shape [T,C,H,W]

    VideoTensor() = default;
    VideoTensor(std::size_t T, std::size_t C, std::size_t H, std::size_t W)
        : data({T, C, H, W}) {}
    explicit VideoTensor(Tensor t);

    std::size_t frames() const { return data.extent(0); }
    std::size_t channels() const { return data.extent(1); }
    std::size_t height() const { return data.extent(2); }
    std::size_t width() const { return data.extent(3); }

    double& at(std::size_t t, std::size_t c, std::size_t h, std::size_t w) {
        return data.at4(t, c, h, w);
    }
    double at(std::size_t t, std::size_t c, std::size_t h, std::size_t w) const {
        return data.at4(t, c, h, w);
    }

    // Frame t as a [C,H,W] tensor.
    Tensor frame(std::size_t t) const;
    void set_frame(std::size_t t, const Tensor& f);

    void clamp01();
};

// Single frame (image) as [C,H,W] in [0,1].

// Raw planar interchange format:
//   magic "GVFVID\0\0", u32 version (=1), u32 T,C,H,W (little-endian),
//   then frame-major 8-bit samples (round(v*255)).
void save_video_raw(const VideoTensor& v, const std::filesystem::path& path);
VideoTensor load_video_raw(const std::filesystem::path& path);

// Frame-image directory: frame_0000.pgm / .ppm, zero padded, lexicographic order.
void save_video_frames(const VideoTensor& v, const std::filesystem::path& dir);
void save_image(const Tensor& frame_chw, const std::filesystem::path& path);
Tensor load_image(const std::filesystem::path& path);

// Dispatches on path: directory of frame images or a raw .gvfv file.
VideoTensor load_video(const std::filesystem::path& path);

// n frames at indices floor(i*T/n); repeats frames when T < n.
VideoTensor sample_frames(const VideoTensor& v, std::size_t n);
std::vector<std::size_t> frame_sample_indices(std::size_t T, std::size_t n);

// Corner-aligned per-frame bilinear resize.
VideoTensor resize_bilinear(const VideoTensor& v, std::size_t new_h, std::size_t new_w);
Tensor resize_frame_bilinear(const Tensor& frame_chw, std::size_t new_h, std::size_t new_w);

// RGB -> luma by channel average; identity for single-channel. Result [H,W].
Tensor to_luma(const Tensor& frame_chw);

}  // namespace gvf
