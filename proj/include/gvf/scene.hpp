#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvf/rng.hpp"
#include "gvf/video.hpp"

namespace gvf {

// Procedural "real" scene description. Two families play the roles of the
// two source datasets: "smooth" (clean shapes on a gradient) and "textured"
// (static speckle over background and shapes).
struct ShapeSpec {
    enum class Kind { Circle, Rect };
    Kind kind = Kind::Circle;
    double cx = 0, cy = 0;   // initial center, pixels
    double size = 4;         // radius (circle) or half-extent (rect)
    double value = 0.8;      // fill intensity
};

struct MotionProgram {
    enum class Kind { Still, Velocity, Oscillate };
    Kind kind = Kind::Still;
    double vx = 0, vy = 0;        // px/frame (Velocity)
    double amp = 0, period = 8;   // px, frames (Oscillate, horizontal)
};

struct SceneSpec {
    std::string family;        // "smooth" | "textured"
    std::vector<ShapeSpec> shapes;
    MotionProgram motion;      // applies to every shape
    double bg_base = 0.2, bg_gx = 0.0, bg_gy = 0.0;  // linear background gradient
    double texture_amp = 0.0;  // static per-pixel speckle amplitude
    std::uint64_t seed = 0;
};

// Random scene from a family. `force_still` pins the motion program to Still
// (the anchor class used by the motion-PCA analysis).
SceneSpec make_scene(const std::string& family, std::uint64_t seed, bool force_still = false);

// Deterministic rasterization; grayscale. Texture speckle is generated once
// per video, so Still scenes are frame-identical.
VideoTensor render_real_video(const SceneSpec& scene, std::size_t frames, std::size_t height,
                              std::size_t width);

}  // namespace gvf
