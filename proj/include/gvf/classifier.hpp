#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gvf/checkpoint.hpp"
#include "gvf/ops.hpp"
#include "gvf/video.hpp"

namespace gvf {

enum class BackboneKind { FeatureMlp, Conv3d };

// Backbone + linear head. The feature backbone runs on forensic feature
// vectors; the conv3d backbone on [T,1,H,W] videos (channel axis folded into
// the depth axis, as both are singleton-compatible at C=1).
struct BackboneSpec {
    BackboneKind kind = BackboneKind::FeatureMlp;
    std::size_t input_dim = 0;                  // feature-mlp only
    std::vector<std::size_t> hidden = {32, 16}; // feature-mlp widths
    std::size_t conv_channels = 4;              // conv3d: channels per block
    std::size_t conv_blocks = 4;                // conv3d: conv+pool blocks
    std::size_t frames = 16, height = 32, width = 32;  // conv3d input size
    std::size_t classes = 2;
};

struct ClassifierTrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double learning_rate = 1e-4;
    std::size_t warmup_steps = 1000;
};

class Classifier {
public:
    Classifier(BackboneSpec spec, std::uint64_t init_seed);
    Classifier(BackboneSpec spec, ParamStore params);

    const BackboneSpec& spec() const { return spec_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::size_t parameter_count() const { return params_.total_values(); }
    static std::size_t expected_parameter_count(const BackboneSpec& spec);

    std::map<std::string, ad::Var> bind_params(ad::Tape& tape, bool needs_grad) const;

    // Feature backbone: x [B,D] -> logits [B,K].
    ad::Var logits_features(ad::Tape& tape, ad::Var x,
                            const std::map<std::string, ad::Var>& bound) const;
    // Conv backbone: video [1,T,H,W] -> logits [1,K]. When last_activation is
    // non-null it receives the post-nonlinearity node of the final conv block
    // (the Grad-CAM target layer).
    ad::Var logits_video(ad::Tape& tape, ad::Var video,
                         const std::map<std::string, ad::Var>& bound,
                         ad::Var* last_activation = nullptr) const;

    // Untaped logits for one sample; dispatches on the backbone kind.
    // Feature-mlp expects [D]; conv3d expects [T,1,H,W] (or [1,T,H,W]).
    std::vector<double> logits_plain(const Tensor& input) const;

    void save(const std::filesystem::path& checkpoint,
              const std::filesystem::path& sidecar_json) const;
    static Classifier load(const std::filesystem::path& checkpoint,
                           const std::filesystem::path& sidecar_json);

private:
    BackboneSpec spec_;
    ParamStore params_;
};

struct Detection {
    std::string label;  // "real" | "fake"
    double score = 0.0; // softmax probability of fake
};

// Binary only; ties break toward real. Throws if the model is not binary.
Detection detect(const Classifier& model, const Tensor& input);

// Softmax over generator classes; sums to 1.
std::vector<double> trace_probabilities(const Classifier& model, const Tensor& input);

// Tracing presumes a fake sample; throws when the manifest label says real.
std::vector<double> trace_sample(const Classifier& model, const Tensor& input,
                                 const std::string& label);

// Per-epoch mean cross-entropy losses. Deterministic given seed; batch order
// reshuffled each epoch. Throws on NaN loss with the step index.
std::vector<double> train_classifier(Classifier& model, const std::vector<Tensor>& inputs,
                                     const std::vector<int>& labels,
                                     const ClassifierTrainConfig& tc, std::uint64_t seed);

struct EvalReport {
    double accuracy = 0.0;
    double fpr = 0.0, fnr = 0.0;  // binary only; 0 when a denominator is empty
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::size_t count = 0;
};

EvalReport evaluate(const Classifier& model, const std::vector<Tensor>& inputs,
                    const std::vector<int>& labels);
// Metrics recomputed from a confusion matrix (cross-check helper).
EvalReport report_from_confusion(std::vector<std::vector<std::size_t>> confusion);

std::string eval_report_to_json(const EvalReport& r);

}  // namespace gvf
