#include "gvf/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace gvf {

namespace {
constexpr double kTau = 6.283185307179586476925286766559;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft1d(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft1d: length not a power of two");
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = kTau / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& v : a) v /= static_cast<double>(n);
}

std::vector<std::complex<double>> dft1d_direct(const std::vector<std::complex<double>>& a,
                                               bool inverse) {
    const std::size_t n = a.size();
    std::vector<std::complex<double>> out(n);
    double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double ang = sign * kTau * static_cast<double>(k * j) / static_cast<double>(n);
            acc += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

namespace {

void transform_1d(std::vector<std::complex<double>>& a) {
    if (is_power_of_two(a.size()))
        fft1d(a, false);
    else
        a = dft1d_direct(a, false);
}

}  // namespace

std::vector<std::complex<double>> dft2d(const Tensor& frame_hw) {
    if (frame_hw.rank() != 2) throw std::invalid_argument("dft2d: expected [H,W]");
    const std::size_t H = frame_hw.extent(0), W = frame_hw.extent(1);
    std::vector<std::complex<double>> spec(H * W);
    for (std::size_t i = 0; i < H * W; ++i) spec[i] = frame_hw[i];

    std::vector<std::complex<double>> row(W);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t w = 0; w < W; ++w) row[w] = spec[h * W + w];
        transform_1d(row);
        for (std::size_t w = 0; w < W; ++w) spec[h * W + w] = row[w];
    }
    std::vector<std::complex<double>> col(H);
    for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t h = 0; h < H; ++h) col[h] = spec[h * W + w];
        transform_1d(col);
        for (std::size_t h = 0; h < H; ++h) spec[h * W + w] = col[h];
    }
    return spec;
}

}  // namespace gvf
