#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gvf/diffusion.hpp"
#include "gvf/ops.hpp"
#include "gvf/quality.hpp"

namespace gvf {

// E1 embeds a single frame (spatial understanding); E2 embeds the frame
// stacked with its predicted successor from a frozen next-frame predictor
// (temporal understanding). Both are small conv embedders, differentiable
// end to end through the input.
class EncoderPair {
public:
    EncoderPair(std::size_t height, std::size_t width, std::size_t d1, std::size_t d2,
                std::uint64_t init_seed, FramePredictor predictor);

    std::size_t d1() const { return d1_; }
    std::size_t d2() const { return d2_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    const FramePredictor& predictor() const { return predictor_; }

    // image_var is [1,1,H,W]; results are [d1] / [d2].
    ad::Var embed_spatial(ad::Tape& tape, ad::Var image_var,
                          const std::map<std::string, ad::Var>& bound) const;
    ad::Var embed_temporal(ad::Tape& tape, ad::Var image_var,
                           const std::map<std::string, ad::Var>& bound) const;

    // Binds encoder and predictor parameters (frozen: never needs grad).
    std::map<std::string, ad::Var> bind_params(ad::Tape& tape) const;

    // Untaped embeddings of a [1,H,W] or [H,W] image.
    Tensor embed_spatial_plain(const Tensor& image) const;
    Tensor embed_temporal_plain(const Tensor& image) const;

private:
    std::size_t height_, width_, d1_, d2_;
    ParamStore params_;
    FramePredictor predictor_;
};

struct AdversarialBudget {
    double eta = 8.0 / 255.0;    // per-pixel infinity bound
    double mu = 1.0 / 255.0;     // step size
    std::size_t iterations = 40;
    double lambda1 = 1.0, lambda2 = 1.0;
    bool cosine = false;         // embedding distance: L1 (default) or cosine
    std::uint64_t seed = 0x44454653ull;  // seeds the undirected starting point
};

struct DefenseResult {
    Tensor immunized;                 // x-hat, [1,H,W]
    std::vector<double> loss_trace;   // one entry per iteration
    double initial_d1 = 0.0, final_d1 = 0.0;
    double initial_d2 = 0.0, final_d2 = 0.0;
    double beta_inf = 0.0;            // achieved ||x-hat − x||_inf
};

// Mean over a fixed bank of seeded random conv filters of normalized feature
// differences; symmetric, zero when a == b, differentiable. Filters are
// linear so the distance grows monotonically along blend paths.
ad::Var perceptual_proxy_taped(ad::Tape& tape, ad::Var a, ad::Var b);
double perceptual_proxy(const Tensor& a, const Tensor& b);

// ||E1(xh)−E1(xt)|| + λ1||E2(xh)−E2(xt)|| + λ2(||xh−x||2 + proxy(xh,x))
ad::Var directed_loss(ad::Tape& tape, ad::Var x_hat, ad::Var x_target, ad::Var x,
                      const EncoderPair& enc, const std::map<std::string, ad::Var>& bound,
                      double lambda1, double lambda2, bool cosine = false);
// ||E1(xh)−E1(x)|| + λ1||E2(xh)−E2(x)|| − λ2(||xh−x||2 + proxy(xh,x))
ad::Var undirected_loss(ad::Tape& tape, ad::Var x_hat, ad::Var x,
                        const EncoderPair& enc, const std::map<std::string, ad::Var>& bound,
                        double lambda1, double lambda2, bool cosine = false);

// PGD descent toward the target's embeddings. x, x_target are [1,H,W] in
// [0,1]. Exactly `iterations` steps; the perturbation is projected to the
// eta ball and the image clamped to [0,1] every step.
DefenseResult directed_defense(const Tensor& x, const Tensor& x_target,
                               const EncoderPair& enc, const AdversarialBudget& budget);
// PGD ascent away from the original's embeddings. The loss is exactly zero
// at x-hat = x with an all-zero subgradient, so the loop starts from a
// seeded perturbation inside the eta ball (skipped when iterations == 0, in
// which case x-hat == x).
DefenseResult undirected_defense(const Tensor& x, const EncoderPair& enc,
                                 const AdversarialBudget& budget);

struct ImmunizationReport {
    QualityReport between_outputs;      // generated-from-x vs generated-from-x-hat
    QualityReport original_vs_ref;      // generated-from-x vs still reference
    QualityReport immunized_vs_ref;     // generated-from-x-hat vs still reference
    double motion_original = 0.0;       // mean motion magnitude of each output
    double motion_immunized = 0.0;
    double motion_delta = 0.0;
};

// Runs a conditional generator from x and x-hat under the same seed and
// compares the outputs. The reference is x tiled to a still video.
ImmunizationReport immunization_report(const Tensor& x, const Tensor& x_hat,
                                       const ToyGenerator& generator, std::uint64_t seed);

}  // namespace gvf
