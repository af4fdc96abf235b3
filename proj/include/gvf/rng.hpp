#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "gvf/tensor.hpp"

namespace gvf {

// Seeded RNG with an explicit Box-Muller gaussian so sampled values do not
// depend on the standard library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1).
    double uniform() {
        return (eng_() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint32_t uniform_int(std::uint32_t n) {
        return static_cast<std::uint32_t>(eng_() % n);
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Tensor gaussian_tensor(std::vector<std::size_t> shape, double stddev = 1.0) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * gaussian();
        return t;
    }

    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
        return t;
    }

    // Derive an independent stream; used to give each sample its own seed.
    std::uint64_t fork(std::uint64_t salt) {
        std::uint64_t x = base_ ^ (salt * 0x9E3779B97F4A7C15ull);
        x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ull;
        x ^= x >> 27; x *= 0x94D049BB133111EBull;
        x ^= x >> 31;
        return x;
    }

    template <class It>
    void shuffle(It first, It last) {
        std::shuffle(first, last, eng_);
    }

private:
    std::mt19937_64 eng_;
    std::uint64_t base_ = eng_();
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gvf
