#include "gvf/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "gvf/adam.hpp"
#include "gvf/rng.hpp"

namespace gvf {

using ad::Tape;
using ad::Var;

namespace {

Tensor fan_in_init(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return rng.uniform_tensor(std::move(shape), -bound, bound);
}

void check_spec(const BackboneSpec& spec) {
    if (spec.classes < 2)
        throw std::invalid_argument("Classifier: class count must be >= 2");
    if (spec.kind == BackboneKind::FeatureMlp) {
        if (spec.input_dim == 0)
            throw std::invalid_argument("Classifier: feature-mlp needs input_dim");
        if (spec.hidden.empty())
            throw std::invalid_argument("Classifier: feature-mlp needs hidden widths");
    } else {
        std::size_t div = std::size_t{1} << spec.conv_blocks;
        if (spec.frames % div || spec.height % div || spec.width % div)
            throw std::invalid_argument(
                "Classifier: conv3d input extents must be divisible by 2^blocks");
    }
}

// Flattened size after the conv blocks.
std::size_t conv_flat_dim(const BackboneSpec& s) {
    std::size_t div = std::size_t{1} << s.conv_blocks;
    return s.conv_channels * (s.frames / div) * (s.height / div) * (s.width / div);
}

}  // namespace

Classifier::Classifier(BackboneSpec spec, std::uint64_t init_seed) : spec_(spec) {
    check_spec(spec_);
    Rng rng(init_seed);
    if (spec_.kind == BackboneKind::FeatureMlp) {
        std::size_t in = spec_.input_dim;
        for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
            std::size_t out = spec_.hidden[i];
            std::string tag = "fc" + std::to_string(i);
            params_.add(tag + "_w", fan_in_init(rng, {out, in}, in));
            params_.add(tag + "_b", Tensor({out}));
            in = out;
        }
        params_.add("head_w", fan_in_init(rng, {spec_.classes, in}, in));
        params_.add("head_b", Tensor({spec_.classes}));
    } else {
        std::size_t in_c = 1;
        for (std::size_t i = 0; i < spec_.conv_blocks; ++i) {
            std::string tag = "block" + std::to_string(i);
            params_.add(tag + "_k",
                        fan_in_init(rng, {spec_.conv_channels, in_c, 3, 3, 3}, in_c * 27));
            params_.add(tag + "_b", Tensor({spec_.conv_channels}));
            in_c = spec_.conv_channels;
        }
        std::size_t flat = conv_flat_dim(spec_);
        params_.add("head_w", fan_in_init(rng, {spec_.classes, flat}, flat));
        params_.add("head_b", Tensor({spec_.classes}));
    }
}

Classifier::Classifier(BackboneSpec spec, ParamStore params)
    : spec_(spec), params_(std::move(params)) {
    check_spec(spec_);
}

std::size_t Classifier::expected_parameter_count(const BackboneSpec& s) {
    std::size_t n = 0;
    if (s.kind == BackboneKind::FeatureMlp) {
        std::size_t in = s.input_dim;
        for (std::size_t w : s.hidden) {
            n += w * in + w;
            in = w;
        }
        n += s.classes * in + s.classes;
    } else {
        std::size_t in_c = 1;
        for (std::size_t i = 0; i < s.conv_blocks; ++i) {
            n += s.conv_channels * in_c * 27 + s.conv_channels;
            in_c = s.conv_channels;
        }
        n += s.classes * conv_flat_dim(s) + s.classes;
    }
    return n;
}

std::map<std::string, Var> Classifier::bind_params(Tape& tape, bool needs_grad) const {
    std::map<std::string, Var> out;
    for (const auto& name : params_.names())
        out[name] = tape.leaf(params_.at(name), needs_grad, name);
    return out;
}

Var Classifier::logits_features(Tape& tape, Var x,
                                const std::map<std::string, Var>& bound) const {
    if (spec_.kind != BackboneKind::FeatureMlp)
        throw std::logic_error("logits_features: not a feature-mlp model");
    Var h = x;
    for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
        std::string tag = "fc" + std::to_string(i);
        h = ad::tanh_op(tape, ad::affine(tape, h, bound.at(tag + "_w"), bound.at(tag + "_b")));
    }
    return ad::affine(tape, h, bound.at("head_w"), bound.at("head_b"));
}

Var Classifier::logits_video(Tape& tape, Var video,
                             const std::map<std::string, Var>& bound,
                             Var* last_activation) const {
    if (spec_.kind != BackboneKind::Conv3d)
        throw std::logic_error("logits_video: not a conv3d model");
    // ReLU keeps activations non-negative, which the Grad-CAM weighting
    // assumes; the feature backbone stays tanh.
    Var h = video;
    for (std::size_t i = 0; i < spec_.conv_blocks; ++i) {
        std::string tag = "block" + std::to_string(i);
        h = ad::relu(tape, ad::conv3d(tape, h, bound.at(tag + "_k"), bound.at(tag + "_b")));
        if (last_activation && i + 1 == spec_.conv_blocks) *last_activation = h;
        h = ad::avgpool3d(tape, h);
    }
    Var flat = ad::flatten(tape, h);
    Var logits = ad::affine(tape, flat, bound.at("head_w"), bound.at("head_b"));
    return ad::reshape(tape, logits, {1, spec_.classes});
}

std::vector<double> Classifier::logits_plain(const Tensor& input) const {
    Tape tape;
    auto bound = bind_params(tape, false);
    Var logits;
    if (spec_.kind == BackboneKind::FeatureMlp) {
        if (input.size() != spec_.input_dim)
            throw std::invalid_argument("Classifier: feature length " +
                                        std::to_string(input.size()) + " != input_dim " +
                                        std::to_string(spec_.input_dim));
        Var x = tape.leaf(Tensor({1, spec_.input_dim}, input.vec()), false, "features");
        logits = logits_features(tape, x, bound);
    } else {
        if (input.size() != spec_.frames * spec_.height * spec_.width)
            throw std::invalid_argument("Classifier: video size mismatch, got " +
                                        input.shape_str());
        Var x = tape.leaf(Tensor({1, spec_.frames, spec_.height, spec_.width}, input.vec()),
                          false, "video");
        logits = logits_video(tape, x, bound);
    }
    return tape.value(logits).vec();
}

void Classifier::save(const std::filesystem::path& checkpoint,
                      const std::filesystem::path& sidecar_json) const {
    params_.save(checkpoint);
    nlohmann::json j;
    j["kind"] = spec_.kind == BackboneKind::FeatureMlp ? "feature-mlp" : "conv3d";
    j["input_dim"] = spec_.input_dim;
    j["hidden"] = spec_.hidden;
    j["conv_channels"] = spec_.conv_channels;
    j["conv_blocks"] = spec_.conv_blocks;
    j["frames"] = spec_.frames;
    j["height"] = spec_.height;
    j["width"] = spec_.width;
    j["classes"] = spec_.classes;
    std::ofstream f(sidecar_json, std::ios::trunc);
    if (!f) throw std::runtime_error("classifier: cannot write " + sidecar_json.string());
    f << j.dump(2) << "\n";
}

Classifier Classifier::load(const std::filesystem::path& checkpoint,
                            const std::filesystem::path& sidecar_json) {
    std::ifstream f(sidecar_json);
    if (!f) throw std::runtime_error("classifier: cannot open " + sidecar_json.string());
    nlohmann::json j;
    f >> j;
    BackboneSpec spec;
    spec.kind = j.at("kind") == "conv3d" ? BackboneKind::Conv3d : BackboneKind::FeatureMlp;
    spec.input_dim = j.at("input_dim");
    spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    spec.conv_channels = j.at("conv_channels");
    spec.conv_blocks = j.at("conv_blocks");
    spec.frames = j.at("frames");
    spec.height = j.at("height");
    spec.width = j.at("width");
    spec.classes = j.at("classes");
    return Classifier(spec, ParamStore::load(checkpoint));
}

Detection detect(const Classifier& model, const Tensor& input) {
    if (model.spec().classes != 2)
        throw std::invalid_argument("detect: model has " +
                                    std::to_string(model.spec().classes) +
                                    " classes, detection needs 2");
    auto probs = ad::softmax(model.logits_plain(input));
    Detection d;
    d.score = probs[1];
    d.label = probs[1] > probs[0] ? "fake" : "real";  // ties break toward real
    return d;
}

std::vector<double> trace_probabilities(const Classifier& model, const Tensor& input) {
    return ad::softmax(model.logits_plain(input));
}

std::vector<double> trace_sample(const Classifier& model, const Tensor& input,
                                 const std::string& label) {
    if (label == "real")
        throw std::invalid_argument("trace: sample is labeled real; tracing presumes fake");
    return trace_probabilities(model, input);
}

std::vector<double> train_classifier(Classifier& model, const std::vector<Tensor>& inputs,
                                     const std::vector<int>& labels,
                                     const ClassifierTrainConfig& tc, std::uint64_t seed) {
    if (inputs.empty() || inputs.size() != labels.size())
        throw std::invalid_argument("train_classifier: empty or mismatched dataset");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= model.spec().classes)
            throw std::invalid_argument("train_classifier: label out of range");

    const bool mlp = model.spec().kind == BackboneKind::FeatureMlp;
    const std::size_t batch = mlp ? tc.batch_size : 1;
    Adam opt({tc.learning_rate, 0.9, 0.999, 1e-8, tc.warmup_steps});
    Rng rng(seed);
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> epoch_losses;
    std::size_t global_step = 0;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double acc = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            std::size_t b = std::min(batch, order.size() - start);
            Tape tape;
            auto bound = model.bind_params(tape, true);
            Var logits;
            std::vector<int> batch_labels;
            if (mlp) {
                Tensor xb({b, model.spec().input_dim});
                for (std::size_t i = 0; i < b; ++i) {
                    const Tensor& x = inputs[order[start + i]];
                    if (x.size() != model.spec().input_dim)
                        throw std::invalid_argument("train_classifier: feature length mismatch");
                    std::copy_n(x.data(), x.size(), xb.data() + i * x.size());
                    batch_labels.push_back(labels[order[start + i]]);
                }
                Var xv = tape.leaf(std::move(xb), false, "batch");
                logits = model.logits_features(tape, xv, bound);
            } else {
                const Tensor& x = inputs[order[start]];
                Var xv = tape.leaf(Tensor({1, model.spec().frames, model.spec().height,
                                           model.spec().width},
                                          x.vec()),
                                   false, "video");
                logits = model.logits_video(tape, xv, bound);
                batch_labels.push_back(labels[order[start]]);
            }
            Var loss = ad::cross_entropy(tape, logits, batch_labels);
            double lv = tape.value(loss).item();
            if (!std::isfinite(lv))
                throw std::runtime_error("train_classifier: divergence at step " +
                                         std::to_string(global_step));
            acc += lv;
            ++n_batches;
            ++global_step;
            tape.backward(loss);
            std::vector<Tensor*> ps;
            std::vector<const Tensor*> gs;
            for (const auto& [name, var] : bound) {
                ps.push_back(&model.params().at(name));
                gs.push_back(&tape.grad(var));
            }
            opt.step(ps, gs);
        }
        epoch_losses.push_back(acc / static_cast<double>(n_batches));
    }
    return epoch_losses;
}

EvalReport report_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
    EvalReport r;
    r.confusion = std::move(confusion);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < r.confusion.size(); ++i)
        for (std::size_t j = 0; j < r.confusion[i].size(); ++j) {
            r.count += r.confusion[i][j];
            if (i == j) correct += r.confusion[i][j];
        }
    r.accuracy = r.count ? static_cast<double>(correct) / static_cast<double>(r.count) : 0.0;
    if (r.confusion.size() == 2) {
        // class 0 = real (negative), class 1 = fake (positive)
        std::size_t tn = r.confusion[0][0], fp = r.confusion[0][1];
        std::size_t fn = r.confusion[1][0], tp = r.confusion[1][1];
        r.fpr = fp + tn ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
        r.fnr = fn + tp ? static_cast<double>(fn) / static_cast<double>(fn + tp) : 0.0;
    }
    return r;
}

EvalReport evaluate(const Classifier& model, const std::vector<Tensor>& inputs,
                    const std::vector<int>& labels) {
    if (inputs.empty() || inputs.size() != labels.size())
        throw std::invalid_argument("evaluate: empty or mismatched dataset");
    std::size_t k = model.spec().classes;
    std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto logits = model.logits_plain(inputs[i]);
        std::size_t pred = 0;
        for (std::size_t c = 1; c < logits.size(); ++c)
            if (logits[c] > logits[pred]) pred = c;  // ties keep the lower class
        confusion.at(labels[i]).at(pred) += 1;
    }
    return report_from_confusion(std::move(confusion));
}

std::string eval_report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["accuracy"] = r.accuracy;
    j["fpr"] = r.fpr;
    j["fnr"] = r.fnr;
    j["confusion"] = r.confusion;
    j["count"] = r.count;
    return j.dump(2);
}

}  // namespace gvf
