#include "gvf/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gvf {

using ad::Tape;
using ad::Var;

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
    NoiseSchedule s;
    s.steps = steps;
    double abar = 1.0;
    for (std::size_t i = 0; i < steps; ++i) {
        double b = steps == 1 ? beta_start
                              : beta_start + (beta_end - beta_start) *
                                                 static_cast<double>(i) /
                                                 static_cast<double>(steps - 1);
        if (b <= 0.0 || b >= 1.0)
            throw std::invalid_argument("NoiseSchedule: beta out of (0,1)");
        s.beta.push_back(b);
        s.alpha.push_back(1.0 - b);
        abar *= 1.0 - b;
        s.alpha_bar.push_back(abar);
        s.sigma.push_back(std::sqrt(b));
    }
    return s;
}

void NoiseSchedule::check_t(std::size_t t) const {
    if (t < 1 || t > steps)
        throw std::out_of_range("diffusion: step t=" + std::to_string(t) +
                                " outside [1," + std::to_string(steps) + "]");
}

Tensor diffuse_forward(const Tensor& x0, std::size_t t, const NoiseSchedule& sched,
                       const Tensor& noise) {
    sched.check_t(t);
    if (!x0.same_shape(noise))
        throw std::invalid_argument("diffuse_forward: noise shape mismatch");
    double abar = sched.alpha_bar_at(t);
    double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * noise[i];
    return out;
}

std::pair<double, double> posterior_coefficients(std::size_t t, const NoiseSchedule& sched) {
    sched.check_t(t);
    double a_t = sched.alpha[t - 1];
    double abar_t = sched.alpha_bar_at(t);
    double abar_prev = sched.alpha_bar_at(t - 1);
    double c_xt = std::sqrt(a_t) * (1.0 - abar_prev) / (1.0 - abar_t);
    double c_x0 = std::sqrt(abar_prev) * (1.0 - a_t) / (1.0 - abar_t);
    return {c_xt, c_x0};
}

Tensor posterior_mean(const Tensor& x_t, const Tensor& predicted_noise, std::size_t t,
                      const NoiseSchedule& sched) {
    auto [c_xt, c_x0] = posterior_coefficients(t, sched);
    double abar_t = sched.alpha_bar_at(t);
    double inv_sqrt_abar = 1.0 / std::sqrt(abar_t);
    double noise_coeff = std::sqrt(1.0 - abar_t);
    Tensor out(x_t.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double x0_hat = inv_sqrt_abar * (x_t[i] - noise_coeff * predicted_noise[i]);
        out[i] = c_xt * x_t[i] + c_x0 * x0_hat;
    }
    return out;
}

Tensor time_embedding(std::size_t t, std::size_t dim) {
    Tensor emb({dim});
    for (std::size_t i = 0; i * 2 < dim; ++i) {
        double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) /
                                            static_cast<double>(dim));
        emb[2 * i] = std::sin(static_cast<double>(t) * freq);
        if (2 * i + 1 < dim) emb[2 * i + 1] = std::cos(static_cast<double>(t) * freq);
    }
    return emb;
}

namespace {

Tensor fan_in_init(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return rng.uniform_tensor(std::move(shape), -bound, bound);
}

// Reads grads off the tape and applies one Adam update to the store.
void apply_adam(Adam& opt, ParamStore& store, const Tape& tape,
                const std::map<std::string, Var>& bound) {
    std::vector<Tensor*> params;
    std::vector<const Tensor*> grads;
    for (const auto& [name, var] : bound) {
        params.push_back(&store.at(name));
        grads.push_back(&tape.grad(var));
    }
    opt.step(params, grads);
}

}  // namespace

ToyGenerator::ToyGenerator(DenoiserConfig cfg, std::uint64_t init_seed, std::string id)
    : cfg_(cfg),
      sched_(NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)),
      id_(std::move(id)) {
    if (cfg_.mixing_width % 2 == 0)
        throw std::invalid_argument("ToyGenerator: mixing width must be odd");
    Rng rng(init_seed);
    const std::size_t h = cfg_.hidden_channels;
    const std::size_t in_ch = cfg_.conditional ? 2 : 1;
    const std::size_t d = cfg_.time_embed_dim;
    params_.add("conv1_k", fan_in_init(rng, {h, in_ch, 3, 3}, in_ch * 9));
    params_.add("conv1_b", Tensor({h}));
    params_.add("t1_w", fan_in_init(rng, {h, d}, d));
    params_.add("t1_b", Tensor({h}));
    params_.add("conv2_k", fan_in_init(rng, {h, h, 3, 3}, h * 9));
    params_.add("conv2_b", Tensor({h}));
    params_.add("t2_w", fan_in_init(rng, {h, d}, d));
    params_.add("t2_b", Tensor({h}));
    params_.add("conv3_k", fan_in_init(rng, {1, h, 3, 3}, h * 9));
    params_.add("conv3_b", Tensor({1}));
    if (cfg_.mixing_width > 1) {
        Tensor w({cfg_.mixing_width}, 0.05);
        w[cfg_.mixing_width / 2] = 1.0;  // identity-dominant start
        params_.add("mix_w", std::move(w));
    }
}

ToyGenerator::ToyGenerator(DenoiserConfig cfg, ParamStore params, std::string id)
    : cfg_(cfg),
      sched_(NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)),
      params_(std::move(params)),
      id_(std::move(id)) {}

std::map<std::string, Var> ToyGenerator::bind_params(Tape& tape, bool needs_grad) const {
    std::map<std::string, Var> out;
    for (const auto& name : params_.names())
        out[name] = tape.leaf(params_.at(name), needs_grad, name);
    return out;
}

Var ToyGenerator::predict_noise(Tape& tape, Var frames_var, std::size_t t,
                                const std::map<std::string, Var>& bound) const {
    Var temb = tape.leaf(time_embedding(t, cfg_.time_embed_dim), false, "time_embed");
    Var tb1 = ad::affine(tape, temb, bound.at("t1_w"), bound.at("t1_b"));
    Var tb2 = ad::affine(tape, temb, bound.at("t2_w"), bound.at("t2_b"));
    Var h1 = ad::tanh_op(
        tape, ad::add_channel_bias(
                  tape, ad::conv2d(tape, frames_var, bound.at("conv1_k"), bound.at("conv1_b")),
                  tb1));
    Var h2 = ad::tanh_op(
        tape,
        ad::add_channel_bias(
            tape, ad::conv2d(tape, h1, bound.at("conv2_k"), bound.at("conv2_b")), tb2));
    Var out = ad::conv2d(tape, h2, bound.at("conv3_k"), bound.at("conv3_b"));
    if (cfg_.mixing_width > 1) out = ad::temporal_mix(tape, out, bound.at("mix_w"));
    return out;
}

namespace {

// Tiles a [1,H,W] conditioning frame along the frame axis -> [T,1,H,W].
Tensor tile_cond(const Tensor& cond, std::size_t T) {
    Tensor out({T, 1, cond.extent(1), cond.extent(2)});
    for (std::size_t t = 0; t < T; ++t)
        std::copy_n(cond.data(), cond.size(), out.data() + t * cond.size());
    return out;
}

}  // namespace

double ToyGenerator::denoiser_loss(const Tensor& x0_frames, std::size_t t,
                                   const Tensor& noise,
                                   std::optional<Tensor> cond_frame) const {
    Tensor x_t = diffuse_forward(x0_frames, t, sched_, noise);
    Tape tape;
    auto bound = bind_params(tape, false);
    Var frames = tape.leaf(x_t, false, "x_t");
    if (cfg_.conditional) {
        if (!cond_frame)
            throw std::invalid_argument("denoiser_loss: conditional variant needs a frame");
        Var cond = tape.leaf(tile_cond(*cond_frame, x_t.extent(0)), false, "cond");
        frames = ad::concat_channels(tape, frames, cond);
    }
    Var pred = predict_noise(tape, frames, t, bound);
    Var noise_var = tape.leaf(noise, false, "noise");
    return tape.value(ad::mse(tape, pred, noise_var)).item();
}

VideoTensor ToyGenerator::sample(std::uint64_t seed, std::optional<Tensor> cond_frame) const {
    if (cfg_.conditional && !cond_frame)
        throw std::invalid_argument("sample: conditional variant needs a frame");
    Rng rng(seed);
    Tensor x =
        rng.gaussian_tensor({cfg_.frames, 1, cfg_.height, cfg_.width});
    Tensor cond_tile;
    if (cfg_.conditional) {
        if (cond_frame->extent(1) != cfg_.height || cond_frame->extent(2) != cfg_.width)
            throw std::invalid_argument("sample: conditioning frame size mismatch");
        cond_tile = tile_cond(*cond_frame, cfg_.frames);
    }
    for (std::size_t t = sched_.steps; t >= 1; --t) {
        Tape tape;
        auto bound = bind_params(tape, false);
        Var frames = tape.leaf(x, false, "x_t");
        if (cfg_.conditional) {
            Var cond = tape.leaf(cond_tile, false, "cond");
            frames = ad::concat_channels(tape, frames, cond);
        }
        Var pred = predict_noise(tape, frames, t, bound);
        Tensor mu = posterior_mean(x, tape.value(pred), t, sched_);
        if (t > 1) {
            double sigma = sched_.sigma[t - 1];
            for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += sigma * rng.gaussian();
        }
        x = std::move(mu);
    }
    VideoTensor out(std::move(x));
    out.clamp01();
    return out;
}

std::vector<double> train_toy_generator(ToyGenerator& gen,
                                        const std::vector<VideoTensor>& corpus,
                                        const GeneratorTrainConfig& tc, std::uint64_t seed) {
    if (corpus.empty())
        throw std::invalid_argument("train_toy_generator: empty corpus");
    Adam opt({tc.learning_rate, 0.9, 0.999, 1e-8, tc.warmup_steps});
    Rng rng(seed);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());

    const auto& cfg = gen.config();
    std::vector<double> losses;
    for (std::size_t step = 0; step < tc.steps; ++step) {
        if (step > 0 && step % corpus.size() == 0) rng.shuffle(order.begin(), order.end());
        const VideoTensor& video = corpus[order[step % corpus.size()]];
        std::size_t t = 1 + rng.uniform_int(static_cast<std::uint32_t>(
                                gen.schedule().steps));
        Tensor noise = rng.gaussian_tensor(video.data.shape());
        Tensor x_t = diffuse_forward(video.data, t, gen.schedule(), noise);

        Tape tape;
        auto bound = gen.bind_params(tape, true);
        Var frames = tape.leaf(x_t, false, "x_t");
        if (cfg.conditional) {
            Var cond = tape.leaf(tile_cond(video.frame(0), video.frames()), false, "cond");
            frames = ad::concat_channels(tape, frames, cond);
        }
        Var pred = gen.predict_noise(tape, frames, t, bound);
        Var noise_var = tape.leaf(noise, false, "noise");
        Var loss = ad::mse(tape, pred, noise_var);
        double lv = tape.value(loss).item();
        if (!std::isfinite(lv))
            throw std::runtime_error("train_toy_generator: divergence at step " +
                                     std::to_string(step));
        losses.push_back(lv);
        tape.backward(loss);
        apply_adam(opt, gen.params(), tape, bound);
    }
    return losses;
}

VideoTensor chain_generators(const ToyGenerator& ga, const ToyGenerator& gb,
                             std::uint64_t seed, std::optional<Tensor> ga_cond) {
    if (!gb.config().conditional)
        throw std::invalid_argument("chain_generators: second stage must be conditional");
    VideoTensor first = ga.sample(seed, std::move(ga_cond));
    Tensor cond = first.frame(0);
    return gb.sample(seed ^ 0x5BD1E995ull, cond);
}

void ToyGenerator::save(const std::filesystem::path& checkpoint,
                        const std::filesystem::path& sidecar_json) const {
    params_.save(checkpoint);
    nlohmann::json j;
    j["id"] = id_;
    j["hidden_channels"] = cfg_.hidden_channels;
    j["time_embed_dim"] = cfg_.time_embed_dim;
    j["mixing_width"] = cfg_.mixing_width;
    j["diffusion_steps"] = cfg_.diffusion_steps;
    j["beta_start"] = cfg_.beta_start;
    j["beta_end"] = cfg_.beta_end;
    j["conditional"] = cfg_.conditional;
    j["frames"] = cfg_.frames;
    j["height"] = cfg_.height;
    j["width"] = cfg_.width;
    std::ofstream f(sidecar_json, std::ios::trunc);
    if (!f) throw std::runtime_error("generator: cannot write " + sidecar_json.string());
    f << j.dump(2) << "\n";
}

ToyGenerator ToyGenerator::load(const std::filesystem::path& checkpoint,
                                const std::filesystem::path& sidecar_json) {
    std::ifstream f(sidecar_json);
    if (!f) throw std::runtime_error("generator: cannot open " + sidecar_json.string());
    nlohmann::json j;
    f >> j;
    DenoiserConfig cfg;
    cfg.hidden_channels = j.at("hidden_channels");
    cfg.time_embed_dim = j.at("time_embed_dim");
    cfg.mixing_width = j.at("mixing_width");
    cfg.diffusion_steps = j.at("diffusion_steps");
    cfg.beta_start = j.at("beta_start");
    cfg.beta_end = j.at("beta_end");
    cfg.conditional = j.at("conditional");
    cfg.frames = j.at("frames");
    cfg.height = j.at("height");
    cfg.width = j.at("width");
    return ToyGenerator(cfg, ParamStore::load(checkpoint), j.at("id").get<std::string>());
}

FramePredictor::FramePredictor(std::size_t hidden_channels, std::size_t height,
                               std::size_t width, std::uint64_t init_seed)
    : hidden_(hidden_channels), height_(height), width_(width) {
    Rng rng(init_seed);
    params_.add("p1_k", fan_in_init(rng, {hidden_, 1, 3, 3}, 9));
    params_.add("p1_b", Tensor({hidden_}));
    params_.add("p2_k", fan_in_init(rng, {hidden_, hidden_, 3, 3}, hidden_ * 9));
    params_.add("p2_b", Tensor({hidden_}));
    params_.add("p3_k", fan_in_init(rng, {1, hidden_, 3, 3}, hidden_ * 9));
    params_.add("p3_b", Tensor({1}));
}

std::map<std::string, Var> FramePredictor::bind_params(Tape& tape, bool needs_grad) const {
    std::map<std::string, Var> out;
    for (const auto& name : params_.names())
        out[name] = tape.leaf(params_.at(name), needs_grad, name);
    return out;
}

Var FramePredictor::predict(Tape& tape, Var frame_var,
                            const std::map<std::string, Var>& bound) const {
    Var h1 = ad::tanh_op(tape, ad::conv2d(tape, frame_var, bound.at("p1_k"), bound.at("p1_b")));
    Var h2 = ad::tanh_op(tape, ad::conv2d(tape, h1, bound.at("p2_k"), bound.at("p2_b")));
    return ad::conv2d(tape, h2, bound.at("p3_k"), bound.at("p3_b"));
}

Tensor FramePredictor::predict_plain(const Tensor& frame_chw) const {
    Tape tape;
    auto bound = bind_params(tape, false);
    Tensor in({1, frame_chw.extent(0), frame_chw.extent(1), frame_chw.extent(2)},
              frame_chw.vec());
    Var fv = tape.leaf(std::move(in), false, "frame");
    Var out = predict(tape, fv, bound);
    const Tensor& ov = tape.value(out);
    return Tensor({ov.extent(1), ov.extent(2), ov.extent(3)}, ov.vec());
}

std::vector<double> train_frame_predictor(FramePredictor& fp,
                                          const std::vector<VideoTensor>& corpus,
                                          std::size_t steps, double learning_rate,
                                          std::uint64_t seed) {
    if (corpus.empty())
        throw std::invalid_argument("train_frame_predictor: empty corpus");
    Adam opt({learning_rate, 0.9, 0.999, 1e-8, 20});
    Rng rng(seed);
    std::vector<double> losses;
    for (std::size_t step = 0; step < steps; ++step) {
        const VideoTensor& v = corpus[rng.uniform_int(static_cast<std::uint32_t>(
            corpus.size()))];
        std::size_t t = rng.uniform_int(static_cast<std::uint32_t>(v.frames() - 1));
        Tensor cur = v.frame(t), nxt = v.frame(t + 1);

        Tape tape;
        auto bound = fp.bind_params(tape, true);
        Tensor in({1, cur.extent(0), cur.extent(1), cur.extent(2)}, cur.vec());
        Var fv = tape.leaf(std::move(in), false, "frame");
        Var pred = fp.predict(tape, fv, bound);
        Tensor target({1, nxt.extent(0), nxt.extent(1), nxt.extent(2)}, nxt.vec());
        Var tv = tape.leaf(std::move(target), false, "target");
        Var loss = ad::mse(tape, pred, tv);
        double lv = tape.value(loss).item();
        if (!std::isfinite(lv))
            throw std::runtime_error("train_frame_predictor: divergence at step " +
                                     std::to_string(step));
        losses.push_back(lv);
        tape.backward(loss);
        apply_adam(opt, fp.params(), tape, bound);
    }
    return losses;
}

}  // namespace gvf
