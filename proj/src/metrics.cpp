#include "gvf/quality.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gvf {

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Normalized 11x11 Gaussian window, built once.
const std::vector<double>& gaussian_window() {
    static const std::vector<double> w = [] {
        std::vector<double> out(kWindow * kWindow);
        double total = 0.0;
        const double c = (kWindow - 1) / 2.0;
        for (std::size_t i = 0; i < kWindow; ++i)
            for (std::size_t j = 0; j < kWindow; ++j) {
                double di = static_cast<double>(i) - c, dj = static_cast<double>(j) - c;
                double v = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
                out[i * kWindow + j] = v;
                total += v;
            }
        for (double& v : out) v /= total;
        return out;
    }();
    return w;
}

}  // namespace

double ssim(const Tensor& frame_a, const Tensor& frame_b) {
    if (!frame_a.same_shape(frame_b))
        throw std::invalid_argument("ssim: shape mismatch " + frame_a.shape_str() + " vs " +
                                    frame_b.shape_str());
    if (frame_a.rank() != 2)
        throw std::invalid_argument("ssim: expected [H,W] luma, got " + frame_a.shape_str());
    const std::size_t H = frame_a.extent(0), W = frame_a.extent(1);
    if (H < kWindow || W < kWindow)
        throw std::invalid_argument("ssim: frame " + frame_a.shape_str() +
                                    " smaller than the 11x11 window");
    const auto& win = gaussian_window();

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y + kWindow <= H; ++y)
        for (std::size_t x = 0; x + kWindow <= W; ++x) {
            double mu_a = 0.0, mu_b = 0.0;
            for (std::size_t i = 0; i < kWindow; ++i)
                for (std::size_t j = 0; j < kWindow; ++j) {
                    double wij = win[i * kWindow + j];
                    mu_a += wij * frame_a.at2(y + i, x + j);
                    mu_b += wij * frame_b.at2(y + i, x + j);
                }
            double va = 0.0, vb = 0.0, cov = 0.0;
            for (std::size_t i = 0; i < kWindow; ++i)
                for (std::size_t j = 0; j < kWindow; ++j) {
                    double wij = win[i * kWindow + j];
                    double da = frame_a.at2(y + i, x + j) - mu_a;
                    double db = frame_b.at2(y + i, x + j) - mu_b;
                    va += wij * da * da;
                    vb += wij * db * db;
                    cov += wij * da * db;
                }
            double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
            double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (va + vb + kC2);
            acc += num / den;
            ++count;
        }
    return acc / static_cast<double>(count);
}

double psnr(const Tensor& frame_a, const Tensor& frame_b) {
    if (!frame_a.same_shape(frame_b))
        throw std::invalid_argument("psnr: shape mismatch " + frame_a.shape_str() + " vs " +
                                    frame_b.shape_str());
    double mse = 0.0;
    for (std::size_t i = 0; i < frame_a.size(); ++i) {
        double d = frame_a[i] - frame_b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(frame_a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

QualityReport video_quality(const VideoTensor& a, const VideoTensor& b,
                            const FrameDistance& proxy) {
    if (a.frames() != b.frames())
        throw std::invalid_argument("video_quality: frame count mismatch " +
                                    std::to_string(a.frames()) + " vs " +
                                    std::to_string(b.frames()));
    if (!a.data.same_shape(b.data))
        throw std::invalid_argument("video_quality: shape mismatch " + a.data.shape_str() +
                                    " vs " + b.data.shape_str());
    QualityReport r;
    r.frame_count = a.frames();
    for (std::size_t t = 0; t < a.frames(); ++t) {
        Tensor fa = a.frame(t), fb = b.frame(t);
        Tensor la = to_luma(fa), lb = to_luma(fb);
        // frames below the ssim window (e.g. smoke-preset 8x8 clips) get NaN
        // instead of aborting the whole report; psnr/proxy stay defined
        bool ssim_ok = la.extent(0) >= kWindow && la.extent(1) >= kWindow;
        r.ssim_per_frame.push_back(ssim_ok ? ssim(la, lb)
                                           : std::numeric_limits<double>::quiet_NaN());
        r.psnr_per_frame.push_back(psnr(fa, fb));
        r.proxy_per_frame.push_back(proxy ? proxy(fa, fb) : 0.0);
    }
    auto mean_of = [](const std::vector<double>& xs) {
        double acc = 0.0;
        std::size_t n = 0;
        for (double v : xs)
            if (std::isfinite(v)) {
                acc += v;
                ++n;
            }
        if (n == 0)
            return xs.empty() ? 0.0 : std::numeric_limits<double>::infinity();
        return acc / static_cast<double>(n);
    };
    r.ssim_mean = mean_of(r.ssim_per_frame);
    r.psnr_mean = mean_of(r.psnr_per_frame);
    r.proxy_mean = mean_of(r.proxy_per_frame);
    return r;
}

}  // namespace gvf
