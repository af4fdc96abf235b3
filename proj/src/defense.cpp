#include "gvf/defense.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gvf/features.hpp"
#include "gvf/rng.hpp"

namespace gvf {

using ad::Tape;
using ad::Var;

namespace {

Tensor fan_in_init(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return rng.uniform_tensor(std::move(shape), -bound, bound);
}

// [H,W] or [1,H,W] -> [1,1,H,W] leaf payload.
Tensor as_batched(const Tensor& image) {
    if (image.rank() == 2) return Tensor({1, 1, image.extent(0), image.extent(1)}, image.vec());
    if (image.rank() == 3 && image.extent(0) == 1)
        return Tensor({1, 1, image.extent(1), image.extent(2)}, image.vec());
    throw std::invalid_argument("defense: expected a [H,W] or [1,H,W] gray image, got " +
                                image.shape_str());
}

// Fixed bank of seeded random 3x3 filters used by the perceptual proxy.
const std::vector<Tensor>& proxy_bank() {
    static const std::vector<Tensor> bank = [] {
        Rng rng(0x50524F58ull);  // fixed: the proxy is a pinned function
        std::vector<Tensor> out;
        for (int i = 0; i < 4; ++i) out.push_back(rng.gaussian_tensor({1, 1, 3, 3}, 0.5));
        return out;
    }();
    return bank;
}

Var embedding_distance(Tape& tape, Var ea, Var eb, bool cosine) {
    if (!cosine) return ad::l1_norm(tape, ad::sub(tape, ea, eb));
    Var dot = ad::sum(tape, ad::mul(tape, ea, eb));
    Var na = ad::l2_norm(tape, ea);
    Var nb = ad::l2_norm(tape, eb);
    Var eps = tape.leaf(Tensor::scalar(1e-12), false, "eps");
    Var denom = ad::add(tape, ad::mul(tape, na, nb), eps);
    Var one = tape.leaf(Tensor::scalar(1.0), false, "one");
    return ad::sub(tape, one, ad::mul(tape, dot, ad::reciprocal(tape, denom)));
}

}  // namespace

EncoderPair::EncoderPair(std::size_t height, std::size_t width, std::size_t d1,
                         std::size_t d2, std::uint64_t init_seed, FramePredictor predictor)
    : height_(height), width_(width), d1_(d1), d2_(d2), predictor_(std::move(predictor)) {
    if (height % 4 || width % 4)
        throw std::invalid_argument("EncoderPair: extents must be divisible by 4");
    Rng rng(init_seed);
    const std::size_t C = 4;
    const std::size_t flat = C * (height / 4) * (width / 4);
    params_.add("e1_k1", fan_in_init(rng, {C, 1, 3, 3}, 9));
    params_.add("e1_b1", Tensor({C}));
    params_.add("e1_k2", fan_in_init(rng, {C, C, 3, 3}, C * 9));
    params_.add("e1_b2", Tensor({C}));
    params_.add("e1_w", fan_in_init(rng, {d1, flat}, flat));
    params_.add("e1_hb", Tensor({d1}));
    params_.add("e2_k1", fan_in_init(rng, {C, 2, 3, 3}, 18));
    params_.add("e2_b1", Tensor({C}));
    params_.add("e2_k2", fan_in_init(rng, {C, C, 3, 3}, C * 9));
    params_.add("e2_b2", Tensor({C}));
    params_.add("e2_w", fan_in_init(rng, {d2, flat}, flat));
    params_.add("e2_hb", Tensor({d2}));
}

std::map<std::string, Var> EncoderPair::bind_params(Tape& tape) const {
    std::map<std::string, Var> out;
    for (const auto& name : params_.names())
        out[name] = tape.leaf(params_.at(name), false, name);
    auto pred = predictor_.bind_params(tape, false);
    out.insert(pred.begin(), pred.end());
    return out;
}

Var EncoderPair::embed_spatial(Tape& tape, Var image_var,
                               const std::map<std::string, Var>& bound) const {
    Var h = ad::tanh_op(
        tape, ad::conv2d(tape, image_var, bound.at("e1_k1"), bound.at("e1_b1")));
    h = ad::avgpool2d(tape, h);
    h = ad::tanh_op(tape, ad::conv2d(tape, h, bound.at("e1_k2"), bound.at("e1_b2")));
    h = ad::avgpool2d(tape, h);
    return ad::affine(tape, ad::flatten(tape, h), bound.at("e1_w"), bound.at("e1_hb"));
}

Var EncoderPair::embed_temporal(Tape& tape, Var image_var,
                                const std::map<std::string, Var>& bound) const {
    Var next = predictor_.predict(tape, image_var, bound);
    Var stacked = ad::concat_channels(tape, image_var, next);
    Var h =
        ad::tanh_op(tape, ad::conv2d(tape, stacked, bound.at("e2_k1"), bound.at("e2_b1")));
    h = ad::avgpool2d(tape, h);
    h = ad::tanh_op(tape, ad::conv2d(tape, h, bound.at("e2_k2"), bound.at("e2_b2")));
    h = ad::avgpool2d(tape, h);
    return ad::affine(tape, ad::flatten(tape, h), bound.at("e2_w"), bound.at("e2_hb"));
}

Tensor EncoderPair::embed_spatial_plain(const Tensor& image) const {
    Tape tape;
    auto bound = bind_params(tape);
    Var x = tape.leaf(as_batched(image), false, "image");
    return tape.value(embed_spatial(tape, x, bound));
}

Tensor EncoderPair::embed_temporal_plain(const Tensor& image) const {
    Tape tape;
    auto bound = bind_params(tape);
    Var x = tape.leaf(as_batched(image), false, "image");
    return tape.value(embed_temporal(tape, x, bound));
}

Var perceptual_proxy_taped(Tape& tape, Var a, Var b) {
    ad::detail::require_same_shape(tape, "perceptual_proxy", a, b);
    const double n = static_cast<double>(tape.value(a).size());
    Var diff = ad::sub(tape, a, b);
    Var acc = -1;
    for (const Tensor& filt : proxy_bank()) {
        Var k = tape.leaf(filt, false, "proxy_k");
        Var zb = tape.leaf(Tensor({1}), false, "proxy_b");
        Var feat = ad::conv2d(tape, diff, k, zb);  // linear: conv(a)-conv(b)
        Var term = ad::scale(tape, ad::l2_norm(tape, feat), 1.0 / std::sqrt(n));
        acc = acc < 0 ? term : ad::add(tape, acc, term);
    }
    return ad::scale(tape, acc, 1.0 / static_cast<double>(proxy_bank().size()));
}

double perceptual_proxy(const Tensor& a, const Tensor& b) {
    auto gray = [](const Tensor& t) { return t.rank() == 2 ? t : to_luma(t); };
    Tape tape;
    Var av = tape.leaf(as_batched(gray(a)), false, "a");
    Var bv = tape.leaf(as_batched(gray(b)), false, "b");
    return tape.value(perceptual_proxy_taped(tape, av, bv)).item();
}

Var directed_loss(Tape& tape, Var x_hat, Var x_target, Var x, const EncoderPair& enc,
                  const std::map<std::string, Var>& bound, double lambda1, double lambda2,
                  bool cosine) {
    Var d1 = embedding_distance(tape, enc.embed_spatial(tape, x_hat, bound),
                                enc.embed_spatial(tape, x_target, bound), cosine);
    Var d2 = embedding_distance(tape, enc.embed_temporal(tape, x_hat, bound),
                                enc.embed_temporal(tape, x_target, bound), cosine);
    Var pix = ad::add(tape, ad::l2_norm(tape, ad::sub(tape, x_hat, x)),
                      perceptual_proxy_taped(tape, x_hat, x));
    return ad::add(tape, ad::add(tape, d1, ad::scale(tape, d2, lambda1)),
                   ad::scale(tape, pix, lambda2));
}

Var undirected_loss(Tape& tape, Var x_hat, Var x, const EncoderPair& enc,
                    const std::map<std::string, Var>& bound, double lambda1, double lambda2,
                    bool cosine) {
    Var d1 = embedding_distance(tape, enc.embed_spatial(tape, x_hat, bound),
                                enc.embed_spatial(tape, x, bound), cosine);
    Var d2 = embedding_distance(tape, enc.embed_temporal(tape, x_hat, bound),
                                enc.embed_temporal(tape, x, bound), cosine);
    Var pix = ad::add(tape, ad::l2_norm(tape, ad::sub(tape, x_hat, x)),
                      perceptual_proxy_taped(tape, x_hat, x));
    return ad::sub(tape, ad::add(tape, d1, ad::scale(tape, d2, lambda1)),
                   ad::scale(tape, pix, lambda2));
}

namespace {

void check_budget(const AdversarialBudget& b) {
    if (b.eta <= 0 || b.mu <= 0)
        throw std::invalid_argument("defense: eta and mu must be positive");
}

void check_image(const Tensor& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0.0 || x[i] > 1.0)
            throw std::invalid_argument("defense: image values must lie in [0,1]");
}

double plain_distance(const Tensor& a, const Tensor& b, bool cosine) {
    if (!cosine) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
        return acc;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
}

// Shared PGD loop; `ascent` flips the step sign (the undirected variant).
DefenseResult pgd_loop(const Tensor& x, const Tensor* x_target, const EncoderPair& enc,
                       const AdversarialBudget& budget, bool ascent) {
    check_budget(budget);
    check_image(x);
    if (x_target) {
        check_image(*x_target);
        if (!x.same_shape(*x_target))
            throw std::invalid_argument("defense: target shape mismatch");
    }
    const Tensor x_b = as_batched(x);
    const Tensor& ref = x_target ? *x_target : x;

    DefenseResult result;
    result.initial_d1 = plain_distance(enc.embed_spatial_plain(x), enc.embed_spatial_plain(ref),
                                       budget.cosine);
    result.initial_d2 = plain_distance(enc.embed_temporal_plain(x),
                                       enc.embed_temporal_plain(ref), budget.cosine);

    Tensor x_hat = x_b;
    if (ascent && budget.iterations > 0) {
        // x-hat = x is a stationary point of the undirected loss (every term
        // and its subgradient vanish there), so ascent starts from a seeded
        // point inside the eta ball.
        Rng rng(budget.seed ^ 0x756E646972ull);
        for (std::size_t i = 0; i < x_hat.size(); ++i) {
            double beta = rng.uniform(-budget.eta / 2.0, budget.eta / 2.0);
            x_hat[i] = std::clamp(x_b[i] + beta, 0.0, 1.0);
        }
    }
    for (std::size_t iter = 0; iter < budget.iterations; ++iter) {
        Tape tape;
        auto bound = enc.bind_params(tape);
        Var xh = tape.leaf(x_hat, true, "x_hat");
        Var xv = tape.leaf(x_b, false, "x");
        Var loss;
        if (ascent) {
            loss = undirected_loss(tape, xh, xv, enc, bound, budget.lambda1, budget.lambda2,
                                   budget.cosine);
        } else {
            Var xt = tape.leaf(as_batched(*x_target), false, "x_target");
            loss = directed_loss(tape, xh, xt, xv, enc, bound, budget.lambda1,
                                 budget.lambda2, budget.cosine);
        }
        result.loss_trace.push_back(tape.value(loss).item());
        tape.backward(loss);
        const Tensor& g = tape.grad(xh);
        const double step = ascent ? budget.mu : -budget.mu;
        for (std::size_t i = 0; i < x_hat.size(); ++i) {
            double s = g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0);
            double v = x_hat[i] + step * s;
            double beta = std::clamp(v - x_b[i], -budget.eta, budget.eta);
            x_hat[i] = std::clamp(x_b[i] + beta, 0.0, 1.0);
        }
    }

    const Tensor x_hat_img({1, x_b.extent(2), x_b.extent(3)}, x_hat.vec());
    result.final_d1 = plain_distance(enc.embed_spatial_plain(x_hat_img),
                                     enc.embed_spatial_plain(ref), budget.cosine);
    result.final_d2 = plain_distance(enc.embed_temporal_plain(x_hat_img),
                                     enc.embed_temporal_plain(ref), budget.cosine);
    for (std::size_t i = 0; i < x_hat.size(); ++i)
        result.beta_inf = std::max(result.beta_inf, std::fabs(x_hat[i] - x_b[i]));
    result.immunized =
        Tensor({1, x_b.extent(2), x_b.extent(3)}, x_hat.vec());
    return result;
}

}  // namespace

DefenseResult directed_defense(const Tensor& x, const Tensor& x_target,
                               const EncoderPair& enc, const AdversarialBudget& budget) {
    return pgd_loop(x, &x_target, enc, budget, false);
}

DefenseResult undirected_defense(const Tensor& x, const EncoderPair& enc,
                                 const AdversarialBudget& budget) {
    return pgd_loop(x, nullptr, enc, budget, true);
}

ImmunizationReport immunization_report(const Tensor& x, const Tensor& x_hat,
                                       const ToyGenerator& generator, std::uint64_t seed) {
    if (!generator.config().conditional)
        throw std::invalid_argument("immunization_report: generator must be conditional");
    auto as_cond = [](const Tensor& img) {
        if (img.rank() == 3) return img;
        return Tensor({1, img.extent(0), img.extent(1)}, img.vec());
    };
    Tensor cx = as_cond(x), cxh = as_cond(x_hat);
    VideoTensor from_x = generator.sample(seed, cx);
    VideoTensor from_xh = generator.sample(seed, cxh);

    VideoTensor ref(from_x.frames(), 1, from_x.height(), from_x.width());
    for (std::size_t t = 0; t < ref.frames(); ++t) ref.set_frame(t, cx);

    FrameDistance proxy = [](const Tensor& a, const Tensor& b) {
        return perceptual_proxy(a, b);
    };
    ImmunizationReport rep;
    rep.between_outputs = video_quality(from_x, from_xh, proxy);
    rep.original_vs_ref = video_quality(from_x, ref, proxy);
    rep.immunized_vs_ref = video_quality(from_xh, ref, proxy);
    FeatureConfig fc;
    rep.motion_original = motion_stats(from_x, fc).mean_magnitude;
    rep.motion_immunized = motion_stats(from_xh, fc).mean_magnitude;
    rep.motion_delta = rep.motion_immunized - rep.motion_original;
    return rep;
}

}  // namespace gvf
