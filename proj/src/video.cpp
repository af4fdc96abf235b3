#include "gvf/video.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gvf {

namespace fs = std::filesystem;

namespace {

constexpr char kVideoMagic[8] = {'G', 'V', 'F', 'V', 'I', 'D', '\0', '\0'};
constexpr std::uint32_t kVideoVersion = 1;

std::uint8_t quantize(double v) {
    double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(q);
}

void put_u32(std::ofstream& f, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
    f.write(b, 4);
}

std::uint32_t get_u32(std::ifstream& f, const fs::path& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw std::runtime_error("video: truncated header in " + path.string());
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

// Skips whitespace and '#' comments in a PNM header.
int pnm_int(std::ifstream& f) {
    int c = f.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF) c = f.get();
        c = f.get();
    }
    int v = 0;
    while (std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = f.get();
    }
    return v;
}

}  // namespace

VideoTensor::VideoTensor(Tensor t) : data(std::move(t)) {
    if (data.rank() != 4)
        throw std::invalid_argument("VideoTensor: expected rank-4 [T,C,H,W], got " +
                                    data.shape_str());
}

Tensor VideoTensor::frame(std::size_t t) const {
    std::size_t n = channels() * height() * width();
    Tensor f({channels(), height(), width()});
    std::copy_n(data.data() + t * n, n, f.data());
    return f;
}

void VideoTensor::set_frame(std::size_t t, const Tensor& f) {
    std::size_t n = channels() * height() * width();
    if (f.size() != n) throw std::invalid_argument("set_frame: frame size mismatch");
    std::copy_n(f.data(), n, data.data() + t * n);
}

void VideoTensor::clamp01() {
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = std::clamp(data[i], 0.0, 1.0);
}

void save_video_raw(const VideoTensor& v, const fs::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("video: cannot write " + path.string());
    f.write(kVideoMagic, 8);
    put_u32(f, kVideoVersion);
    put_u32(f, static_cast<std::uint32_t>(v.frames()));
    put_u32(f, static_cast<std::uint32_t>(v.channels()));
    put_u32(f, static_cast<std::uint32_t>(v.height()));
    put_u32(f, static_cast<std::uint32_t>(v.width()));
    std::vector<std::uint8_t> buf(v.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize(v.data[i]);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("video: write failed for " + path.string());
}

VideoTensor load_video_raw(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("video: cannot open " + path.string());
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kVideoMagic, 8) != 0)
        throw std::runtime_error("video: bad magic in " + path.string());
    std::uint32_t version = get_u32(f, path);
    if (version != kVideoVersion)
        throw std::runtime_error("video: unsupported version in " + path.string());
    std::uint32_t T = get_u32(f, path), C = get_u32(f, path);
    std::uint32_t H = get_u32(f, path), W = get_u32(f, path);
    if (T < 1 || (C != 1 && C != 3))
        throw std::runtime_error("video: invalid dimensions in " + path.string());
    VideoTensor v(T, C, H, W);
    std::vector<std::uint8_t> buf(v.data.size());
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("video: truncated samples in " + path.string());
    for (std::size_t i = 0; i < buf.size(); ++i) v.data[i] = buf[i] / 255.0;
    return v;
}

void save_image(const Tensor& frame_chw, const fs::path& path) {
    if (frame_chw.rank() != 3)
        throw std::invalid_argument("save_image: expected [C,H,W]");
    const std::size_t C = frame_chw.extent(0), H = frame_chw.extent(1),
                      W = frame_chw.extent(2);
    if (C != 1 && C != 3) throw std::invalid_argument("save_image: C must be 1 or 3");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("image: cannot write " + path.string());
    f << (C == 1 ? "P5" : "P6") << "\n" << W << " " << H << "\n255\n";
    std::vector<std::uint8_t> buf(C * H * W);
    // PNM is pixel-interleaved
    std::size_t k = 0;
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
            for (std::size_t c = 0; c < C; ++c)
                buf[k++] = quantize(frame_chw.at3(c, h, w));
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

Tensor load_image(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("image: cannot open " + path.string());
    char p = static_cast<char>(f.get());
    char kind = static_cast<char>(f.get());
    if (p != 'P' || (kind != '5' && kind != '6'))
        throw std::runtime_error("image: unsupported format in " + path.string());
    const std::size_t C = (kind == '5') ? 1 : 3;
    std::size_t W = static_cast<std::size_t>(pnm_int(f));
    std::size_t H = static_cast<std::size_t>(pnm_int(f));
    std::size_t maxval = static_cast<std::size_t>(pnm_int(f));
    if (maxval != 255) throw std::runtime_error("image: expected 8-bit in " + path.string());
    std::vector<std::uint8_t> buf(C * H * W);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("image: truncated pixels in " + path.string());
    Tensor out({C, H, W});
    std::size_t k = 0;
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
            for (std::size_t c = 0; c < C; ++c)
                out.at3(c, h, w) = buf[k++] / 255.0;
    return out;
}

void save_video_frames(const VideoTensor& v, const fs::path& dir) {
    fs::create_directories(dir);
    const char* ext = v.channels() == 1 ? ".pgm" : ".ppm";
    for (std::size_t t = 0; t < v.frames(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04zu%s", t, ext);
        save_image(v.frame(t), dir / name);
    }
}

VideoTensor load_video(const fs::path& path) {
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(path)) {
            auto ext = e.path().extension().string();
            if (ext == ".pgm" || ext == ".ppm") files.push_back(e.path());
        }
        if (files.empty())
            throw std::runtime_error("video: no frame images in " + path.string());
        std::sort(files.begin(), files.end());
        Tensor first = load_image(files[0]);
        VideoTensor v(files.size(), first.extent(0), first.extent(1), first.extent(2));
        v.set_frame(0, first);
        for (std::size_t t = 1; t < files.size(); ++t) {
            Tensor fr = load_image(files[t]);
            if (fr.shape() != first.shape())
                throw std::runtime_error("video: frame dimension mismatch at " +
                                         files[t].string());
            v.set_frame(t, fr);
        }
        return v;
    }
    return load_video_raw(path);
}

std::vector<std::size_t> frame_sample_indices(std::size_t T, std::size_t n) {
    if (n == 0) throw std::invalid_argument("sample_frames: n must be >= 1");
    if (T == 0) throw std::invalid_argument("sample_frames: empty video");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = std::min(i * T / n, T - 1);
    return idx;
}

VideoTensor sample_frames(const VideoTensor& v, std::size_t n) {
    auto idx = frame_sample_indices(v.frames(), n);
    VideoTensor out(n, v.channels(), v.height(), v.width());
    for (std::size_t i = 0; i < n; ++i) out.set_frame(i, v.frame(idx[i]));
    return out;
}

Tensor resize_frame_bilinear(const Tensor& frame_chw, std::size_t new_h, std::size_t new_w) {
    if (new_h < 1 || new_w < 1)
        throw std::invalid_argument("resize: target extents must be >= 1");
    const std::size_t C = frame_chw.extent(0), H = frame_chw.extent(1),
                      W = frame_chw.extent(2);
    Tensor out({C, new_h, new_w});
    // corner-aligned sampling
    auto src = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
        if (n_out == 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(n_in - 1) /
               static_cast<double>(n_out - 1);
    };
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t h = 0; h < new_h; ++h) {
            double sy = src(h, new_h, H);
            std::size_t y0 = static_cast<std::size_t>(sy);
            std::size_t y1 = std::min(y0 + 1, H - 1);
            double fy = sy - static_cast<double>(y0);
            for (std::size_t w = 0; w < new_w; ++w) {
                double sx = src(w, new_w, W);
                std::size_t x0 = static_cast<std::size_t>(sx);
                std::size_t x1 = std::min(x0 + 1, W - 1);
                double fx = sx - static_cast<double>(x0);
                double v00 = frame_chw.at3(c, y0, x0), v01 = frame_chw.at3(c, y0, x1);
                double v10 = frame_chw.at3(c, y1, x0), v11 = frame_chw.at3(c, y1, x1);
                out.at3(c, h, w) = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                   fy * ((1 - fx) * v10 + fx * v11);
            }
        }
    return out;
}

VideoTensor resize_bilinear(const VideoTensor& v, std::size_t new_h, std::size_t new_w) {
    VideoTensor out(v.frames(), v.channels(), new_h, new_w);
    for (std::size_t t = 0; t < v.frames(); ++t)
        out.set_frame(t, resize_frame_bilinear(v.frame(t), new_h, new_w));
    return out;
}

Tensor to_luma(const Tensor& frame_chw) {
    const std::size_t C = frame_chw.extent(0), H = frame_chw.extent(1),
                      W = frame_chw.extent(2);
    Tensor out({H, W});
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
            double acc = 0.0;
            for (std::size_t c = 0; c < C; ++c) acc += frame_chw.at3(c, h, w);
            out.at2(h, w) = acc / static_cast<double>(C);
        }
    return out;
}

}  // namespace gvf
