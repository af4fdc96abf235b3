#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "gvf/tensor.hpp"

namespace gvf {

// 2D DFT of a real [H,W] frame. Radix-2 iterative FFT along each axis when the
// extent is a power of two, direct summation otherwise.
std::vector<std::complex<double>> dft2d(const Tensor& frame_hw);

// In-place 1D transform helpers (exposed for the direct-summation oracle).
void fft1d(std::vector<std::complex<double>>& a, bool inverse);
std::vector<std::complex<double>> dft1d_direct(const std::vector<std::complex<double>>& a,
                                               bool inverse);

bool is_power_of_two(std::size_t n);

}  // namespace gvf
