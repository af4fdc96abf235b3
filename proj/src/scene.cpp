#include "gvf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gvf {

namespace {

// Reflects p into [lo, hi].
double reflect(double p, double lo, double hi) {
    double range = hi - lo;
    if (range <= 0) return lo;
    double q = std::fmod(p - lo, 2 * range);
    if (q < 0) q += 2 * range;
    return q <= range ? lo + q : hi - (q - range);
}

}  // namespace

SceneSpec make_scene(const std::string& family, std::uint64_t seed, bool force_still) {
    if (family != "smooth" && family != "textured")
        throw std::invalid_argument("make_scene: unknown family '" + family + "'");
    Rng rng(seed);
    SceneSpec s;
    s.family = family;
    s.seed = seed;
    s.bg_base = rng.uniform(0.1, 0.35);
    s.bg_gx = rng.uniform(-0.2, 0.2);
    s.bg_gy = rng.uniform(-0.2, 0.2);
    s.texture_amp = family == "textured" ? rng.uniform(0.08, 0.2) : 0.0;

    std::size_t n_shapes = 1 + rng.uniform_int(2);
    for (std::size_t i = 0; i < n_shapes; ++i) {
        ShapeSpec sh;
        sh.kind = rng.uniform() < 0.5 ? ShapeSpec::Kind::Circle : ShapeSpec::Kind::Rect;
        sh.cx = rng.uniform(0.3, 0.7);  // fractional; scaled at render time
        sh.cy = rng.uniform(0.3, 0.7);
        sh.size = rng.uniform(0.08, 0.18);
        sh.value = rng.uniform(0.55, 0.95);
        s.shapes.push_back(sh);
    }

    if (force_still) {
        s.motion.kind = MotionProgram::Kind::Still;
    } else {
        double r = rng.uniform();
        if (r < 0.34) {
            s.motion.kind = MotionProgram::Kind::Still;
        } else if (r < 0.67) {
            s.motion.kind = MotionProgram::Kind::Velocity;
            s.motion.vx = rng.uniform(-1.5, 1.5);
            s.motion.vy = rng.uniform(-1.5, 1.5);
        } else {
            s.motion.kind = MotionProgram::Kind::Oscillate;
            s.motion.amp = rng.uniform(1.0, 4.0);
            s.motion.period = rng.uniform(6.0, 14.0);
        }
    }
    return s;
}

VideoTensor render_real_video(const SceneSpec& scene, std::size_t frames, std::size_t height,
                              std::size_t width) {
    VideoTensor out(frames, 1, height, width);
    const double H = static_cast<double>(height), W = static_cast<double>(width);

    // Static speckle, shared by all frames.
    Rng tex_rng(scene.seed ^ 0xA53C9D27ull);
    Tensor speckle({height, width});
    if (scene.texture_amp > 0)
        for (std::size_t i = 0; i < speckle.size(); ++i)
            speckle[i] = scene.texture_amp * (tex_rng.uniform() - 0.5);

    const bool fractional = !scene.shapes.empty() && scene.shapes[0].size < 1.0;

    for (std::size_t t = 0; t < frames; ++t) {
        double dx = 0, dy = 0;
        switch (scene.motion.kind) {
            case MotionProgram::Kind::Still: break;
            case MotionProgram::Kind::Velocity:
                dx = scene.motion.vx * static_cast<double>(t);
                dy = scene.motion.vy * static_cast<double>(t);
                break;
            case MotionProgram::Kind::Oscillate:
                dx = scene.motion.amp *
                     std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(t) /
                              scene.motion.period);
                break;
        }
        for (std::size_t h = 0; h < height; ++h)
            for (std::size_t w = 0; w < width; ++w) {
                double v = scene.bg_base + scene.bg_gx * (static_cast<double>(w) / W) +
                           scene.bg_gy * (static_cast<double>(h) / H);
                double px = static_cast<double>(w) + 0.5;
                double py = static_cast<double>(h) + 0.5;
                for (const auto& sh : scene.shapes) {
                    // Scene specs built by make_scene store fractional geometry;
                    // hand-built specs may use pixel units directly.
                    double size = fractional ? sh.size * std::min(H, W) : sh.size;
                    double cx = fractional ? sh.cx * W : sh.cx;
                    double cy = fractional ? sh.cy * H : sh.cy;
                    cx = reflect(cx + dx, size, W - size);
                    cy = reflect(cy + dy, size, H - size);
                    bool inside = false;
                    if (sh.kind == ShapeSpec::Kind::Circle) {
                        double rx = px - cx, ry = py - cy;
                        inside = rx * rx + ry * ry <= size * size;
                    } else {
                        inside = std::fabs(px - cx) <= size && std::fabs(py - cy) <= size;
                    }
                    if (inside) v = sh.value;
                }
                v += speckle.at2(h, w);
                out.at(t, 0, h, w) = std::clamp(v, 0.0, 1.0);
            }
    }
    return out;
}

}  // namespace gvf
