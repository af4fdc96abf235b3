#include "gvf/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gvf {

using ad::Tape;
using ad::Var;

namespace {

// Corner-aligned trilinear upsample of a [T,H,W] map.
Tensor upsample_trilinear(const Tensor& map, std::size_t T, std::size_t H, std::size_t W) {
    const std::size_t t0 = map.extent(0), h0 = map.extent(1), w0 = map.extent(2);
    auto coord = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
        if (n_out <= 1 || n_in <= 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(n_in - 1) /
               static_cast<double>(n_out - 1);
    };
    Tensor out({T, H, W});
    for (std::size_t t = 0; t < T; ++t) {
        double ft = coord(t, T, t0);
        std::size_t ti = std::min(static_cast<std::size_t>(ft), t0 - 1);
        std::size_t tj = std::min(ti + 1, t0 - 1);
        double at = ft - static_cast<double>(ti);
        for (std::size_t h = 0; h < H; ++h) {
            double fh = coord(h, H, h0);
            std::size_t hi = std::min(static_cast<std::size_t>(fh), h0 - 1);
            std::size_t hj = std::min(hi + 1, h0 - 1);
            double ah = fh - static_cast<double>(hi);
            for (std::size_t w = 0; w < W; ++w) {
                double fw = coord(w, W, w0);
                std::size_t wi = std::min(static_cast<std::size_t>(fw), w0 - 1);
                std::size_t wj = std::min(wi + 1, w0 - 1);
                double aw = fw - static_cast<double>(wi);
                double v = 0.0;
                for (int dt = 0; dt < 2; ++dt)
                    for (int dh = 0; dh < 2; ++dh)
                        for (int dw = 0; dw < 2; ++dw) {
                            double wgt = (dt ? at : 1 - at) * (dh ? ah : 1 - ah) *
                                         (dw ? aw : 1 - aw);
                            v += wgt * map.at3(dt ? tj : ti, dh ? hj : hi, dw ? wj : wi);
                        }
                out.at3(t, h, w) = v;
            }
        }
    }
    return out;
}

}  // namespace

VideoTensor grad_cam(const Classifier& model, const VideoTensor& video,
                     std::size_t target_class) {
    const BackboneSpec& spec = model.spec();
    if (spec.kind != BackboneKind::Conv3d)
        throw std::invalid_argument("grad_cam: feature-mlp backbone has no spatial maps");
    if (target_class >= spec.classes)
        throw std::invalid_argument("grad_cam: target class out of range");
    if (video.frames() != spec.frames || video.height() != spec.height ||
        video.width() != spec.width || video.channels() != 1)
        throw std::invalid_argument("grad_cam: video shape " + video.data.shape_str() +
                                    " does not match the model input");

    Tape tape;
    auto bound = model.bind_params(tape, true);
    Var xv = tape.leaf(Tensor({1, spec.frames, spec.height, spec.width}, video.data.vec()),
                       false, "video");
    Var last_act = -1;
    Var logits = model.logits_video(tape, xv, bound, &last_act);
    Var target = ad::select(tape, logits, target_class);
    tape.backward(target);

    const Tensor& act = tape.value(last_act);   // [C, T', H', W']
    const Tensor& grd = tape.grad(last_act);
    const std::size_t C = act.extent(0), Tp = act.extent(1), Hp = act.extent(2),
                      Wp = act.extent(3);
    const std::size_t vol = Tp * Hp * Wp;

    std::vector<double> weights(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < vol; ++i) weights[c] += grd[c * vol + i];
        weights[c] /= static_cast<double>(vol);
    }

    Tensor cam({Tp, Hp, Wp});
    for (std::size_t i = 0; i < vol; ++i) {
        double v = 0.0;
        for (std::size_t c = 0; c < C; ++c) v += weights[c] * act[c * vol + i];
        cam[i] = std::max(0.0, v);
    }

    // Normalize after upsampling so the emitted map peaks at exactly 1.
    Tensor up = upsample_trilinear(cam, spec.frames, spec.height, spec.width);
    double lo = up[0], hi = up[0];
    for (std::size_t i = 0; i < up.size(); ++i) {
        lo = std::min(lo, up[i]);
        hi = std::max(hi, up[i]);
    }
    if (hi > lo)
        for (std::size_t i = 0; i < up.size(); ++i) up[i] = (up[i] - lo) / (hi - lo);
    else
        for (std::size_t i = 0; i < up.size(); ++i) up[i] = 0.0;
    return VideoTensor(Tensor({spec.frames, 1, spec.height, spec.width}, up.vec()));
}

}  // namespace gvf
