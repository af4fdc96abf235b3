#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvf/adam.hpp"
#include "gvf/checkpoint.hpp"
#include "gvf/ops.hpp"
#include "gvf/rng.hpp"
#include "gvf/video.hpp"

namespace gvf {

// alpha_bar(0) == 1 by convention; indices 1..steps address the schedule.
struct NoiseSchedule {
    std::size_t steps = 0;
    std::vector<double> beta;       // beta[t-1] for t in 1..steps
    std::vector<double> alpha;      // 1 - beta
    std::vector<double> alpha_bar;  // prod alpha, alpha_bar[t-1]
    std::vector<double> sigma;      // sqrt(beta_t)

    static NoiseSchedule linear(std::size_t steps, double beta_start = 1e-4,
                                double beta_end = 2e-2);

    double alpha_bar_at(std::size_t t) const {  // t = 0 -> 1
        return t == 0 ? 1.0 : alpha_bar.at(t - 1);
    }
    void check_t(std::size_t t) const;
};

// x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) noise
Tensor diffuse_forward(const Tensor& x0, std::size_t t, const NoiseSchedule& sched,
                       const Tensor& noise);

// Posterior mean with x0 eliminated in favor of the predicted noise:
//   mu = [sqrt(a_t)(1-abar_{t-1})/(1-abar_t)] x_t
//      + [sqrt(abar_{t-1})(1-a_t)/(1-abar_t)] (x_t - sqrt(1-abar_t) eps)/sqrt(abar_t)
Tensor posterior_mean(const Tensor& x_t, const Tensor& predicted_noise, std::size_t t,
                      const NoiseSchedule& sched);
// The two coefficients above, exposed for cross-checks.
std::pair<double, double> posterior_coefficients(std::size_t t, const NoiseSchedule& sched);

struct DenoiserConfig {
    std::size_t hidden_channels = 8;
    std::size_t time_embed_dim = 8;
    std::size_t mixing_width = 1;        // odd; 1 disables cross-frame coupling
    std::size_t diffusion_steps = 50;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    bool conditional = false;            // first-frame conditioning channel
    std::size_t frames = 16;
    std::size_t height = 32;
    std::size_t width = 32;
};

struct GeneratorTrainConfig {
    std::size_t steps = 250;
    double learning_rate = 3e-3;
    std::size_t warmup_steps = 50;
};

// A toy video generator: per-frame convolutional noise predictor with a
// sinusoidal time embedding, plus a learned temporal mixing window.
class ToyGenerator {
public:
    ToyGenerator(DenoiserConfig cfg, std::uint64_t init_seed, std::string id);
    ToyGenerator(DenoiserConfig cfg, ParamStore params, std::string id);

    const std::string& id() const { return id_; }
    const DenoiserConfig& config() const { return cfg_; }
    const NoiseSchedule& schedule() const { return sched_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::size_t parameter_count() const { return params_.total_values(); }

    // eps_theta on the tape. frames_var is [T, C_in, H, W] where C_in includes
    // the conditioning channel when configured. Returns [T,1,H,W].
    ad::Var predict_noise(ad::Tape& tape, ad::Var frames_var, std::size_t t,
                          const std::map<std::string, ad::Var>& bound) const;

    // ||noise - eps_theta(x_t, t)||^2 / N on a fresh tape (used by tests).
    double denoiser_loss(const Tensor& x0_frames, std::size_t t, const Tensor& noise,
                         std::optional<Tensor> cond_frame = std::nullopt) const;

    VideoTensor sample(std::uint64_t seed,
                       std::optional<Tensor> cond_frame = std::nullopt) const;

    std::map<std::string, ad::Var> bind_params(ad::Tape& tape, bool needs_grad) const;

    void save(const std::filesystem::path& checkpoint,
              const std::filesystem::path& sidecar_json) const;
    static ToyGenerator load(const std::filesystem::path& checkpoint,
                             const std::filesystem::path& sidecar_json);

private:
    DenoiserConfig cfg_;
    NoiseSchedule sched_;
    ParamStore params_;
    std::string id_;
};

// Trains eps_theta on videos of one scene family; returns per-step losses.
std::vector<double> train_toy_generator(ToyGenerator& gen,
                                        const std::vector<VideoTensor>& corpus,
                                        const GeneratorTrainConfig& tc, std::uint64_t seed);

// gA's output video's first frame conditions gB. gB must be conditional.
VideoTensor chain_generators(const ToyGenerator& ga, const ToyGenerator& gb,
                             std::uint64_t seed,
                             std::optional<Tensor> ga_cond = std::nullopt);

// Fixed next-frame predictor used by the temporal defense encoder.
class FramePredictor {
public:
    FramePredictor(std::size_t hidden_channels, std::size_t height, std::size_t width,
                   std::uint64_t init_seed);

    // Taped forward: frame_var [1,1,H,W] -> predicted next frame [1,1,H,W].
    ad::Var predict(ad::Tape& tape, ad::Var frame_var,
                    const std::map<std::string, ad::Var>& bound) const;
    std::map<std::string, ad::Var> bind_params(ad::Tape& tape, bool needs_grad) const;
    Tensor predict_plain(const Tensor& frame_chw) const;

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::size_t hidden() const { return hidden_; }

private:
    std::size_t hidden_, height_, width_;
    ParamStore params_;
};

// Supervised one-step-ahead training on real videos; returns per-step losses.
std::vector<double> train_frame_predictor(FramePredictor& fp,
                                          const std::vector<VideoTensor>& corpus,
                                          std::size_t steps, double learning_rate,
                                          std::uint64_t seed);

// Sinusoidal embedding of the step index.
Tensor time_embedding(std::size_t t, std::size_t dim);

}  // namespace gvf
