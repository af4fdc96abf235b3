#include "gvf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "gvf/diffusion.hpp"
#include "gvf/fft.hpp"
#include "gvf/pca.hpp"
#include "gvf/rng.hpp"
#include "gvf/scene.hpp"
#include "gvf/svg.hpp"
#include "gvf/video.hpp"

namespace gvf {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string>& families() {
    static const std::vector<std::string> f = {"smooth", "textured"};
    return f;
}

// Sub-seed derivation: FNV-1a of a salt string folded into the run seed.
std::uint64_t sub_seed(std::uint64_t seed, const std::string& salt) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
    for (unsigned char c : salt) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string zero_pad(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return buf;
}

DenoiserConfig variant_config(const PipelineConfig& cfg, const std::string& variant) {
    DenoiserConfig d;
    d.hidden_channels = cfg.gen_hidden;
    d.time_embed_dim = 4;
    d.frames = cfg.frames;
    d.height = cfg.height;
    d.width = cfg.width;
    d.conditional = variant[0] == 'c';
    // Each variant pairs a distinct noise schedule with a distinct temporal
    // mixing width; those choices set the residual-noise level and the
    // frame-to-frame coupling, which are the per-generator signatures the
    // tracer learns (and which transfer across scene families).
    if (variant == "ua") {
        d.mixing_width = 1;
        d.diffusion_steps = 6;
        d.beta_end = 1.5e-2;
    } else if (variant == "ub") {
        d.mixing_width = 3;
        d.diffusion_steps = 16;
        d.beta_end = 1e-1;
    } else if (variant == "ca") {
        d.mixing_width = 5;
        d.diffusion_steps = 10;
        d.beta_end = 4e-2;
    } else {  // cb
        d.mixing_width = 1;
        d.diffusion_steps = 12;
        d.beta_end = 3e-1;
    }
    return d;
}

std::string run_name(Scenario scenario, const std::string& leave_out, std::uint64_t seed) {
    std::string name = to_string(scenario);
    if (!leave_out.empty()) name += "_" + leave_out;
    return name + "_seed" + std::to_string(seed);
}

json eval_to_json(const EvalReport& e) {
    json j;
    j["accuracy"] = e.accuracy;
    j["fpr"] = e.fpr;
    j["fnr"] = e.fnr;
    j["count"] = e.count;
    j["confusion"] = e.confusion;
    return j;
}

json quality_to_json_obj(const QualityReport& r) {
    json j;
    j["frame_count"] = r.frame_count;
    j["ssim_mean"] = r.ssim_mean;
    j["psnr_mean"] = std::isfinite(r.psnr_mean) ? json(r.psnr_mean) : json("inf");
    j["proxy_mean"] = r.proxy_mean;
    j["ssim_per_frame"] = r.ssim_per_frame;
    json psnr = json::array();
    for (double v : r.psnr_per_frame) psnr.push_back(std::isfinite(v) ? json(v) : json("inf"));
    j["psnr_per_frame"] = psnr;
    j["proxy_per_frame"] = r.proxy_per_frame;
    return j;
}

// ---- corpus --------------------------------------------------------------

struct CorpusBuilder {
    const PipelineConfig& cfg;
    std::vector<std::string> corrupt;
    CorpusResult result;

    // Loads `path` if it is a readable video file; records corruption.
    std::optional<VideoTensor> try_load(const fs::path& path) {
        if (!fs::exists(path)) return std::nullopt;
        try {
            return load_video_raw(path);
        } catch (const std::exception& e) {
            corrupt.push_back(path.string() + " (" + e.what() + ")");
            return std::nullopt;
        }
    }

    // Returns the on-disk video, producing it via `make` when missing. The
    // returned tensor is always the stored (quantized) one so resumed and
    // fresh runs see identical data.
    template <typename Fn>
    VideoTensor ensure_video(const fs::path& path, Fn&& make) {
        if (auto v = try_load(path)) {
            ++result.reused;
            return *v;
        }
        if (!corrupt.empty() && fs::exists(path)) return VideoTensor(1, 1, 1, 1);
        VideoTensor v = make();
        save_video_raw(v, path);
        ++result.rendered;
        return load_video_raw(path);
    }
};

ToyGenerator load_or_train_generator(const PipelineConfig& cfg, const std::string& family,
                                     const std::string& variant,
                                     const std::vector<VideoTensor>& reals) {
    fs::path ck = cfg.checkpoint_dir / ("gen_" + family + "_" + variant + ".gvft");
    fs::path sc = cfg.checkpoint_dir / ("gen_" + family + "_" + variant + ".json");
    if (fs::exists(ck) && fs::exists(sc)) return ToyGenerator::load(ck, sc);

    ToyGenerator gen(variant_config(cfg, variant),
                     sub_seed(cfg.seed, "gen-init/" + family + "/" + variant), variant);
    GeneratorTrainConfig tc;
    tc.steps = cfg.gen_train_steps;
    tc.learning_rate = cfg.gen_learning_rate;
    tc.warmup_steps = std::max<std::size_t>(1, cfg.gen_train_steps / 10);
    std::vector<VideoTensor> train_set(
        reals.begin(), reals.begin() + std::min<std::size_t>(reals.size(), 24));
    train_toy_generator(gen, train_set, tc,
                        sub_seed(cfg.seed, "gen-train/" + family + "/" + variant));
    gen.save(ck, sc);
    return gen;
}

// ---- features & labels ----------------------------------------------------

struct Standardizer {
    std::vector<double> mean, stdev;

    static Standardizer fit(const std::vector<std::vector<double>>& feats,
                            const std::vector<std::size_t>& idx) {
        Standardizer s;
        const std::size_t d = feats.at(idx.at(0)).size();
        s.mean.assign(d, 0.0);
        s.stdev.assign(d, 0.0);
        for (std::size_t i : idx)
            for (std::size_t k = 0; k < d; ++k) s.mean[k] += feats[i][k];
        for (double& m : s.mean) m /= static_cast<double>(idx.size());
        for (std::size_t i : idx)
            for (std::size_t k = 0; k < d; ++k) {
                double c = feats[i][k] - s.mean[k];
                s.stdev[k] += c * c;
            }
        for (double& v : s.stdev) v = std::sqrt(v / static_cast<double>(idx.size()));
        return s;
    }

    Tensor apply(const std::vector<double>& f) const {
        Tensor t({f.size()});
        for (std::size_t k = 0; k < f.size(); ++k)
            t[k] = (f[k] - mean[k]) / (stdev[k] > 1e-12 ? stdev[k] : 1.0);
        return t;
    }
};

std::string base_generator(const ManifestEntry& e) {
    return e.generator->substr(0, e.generator->find('+'));
}

bool is_chained(const ManifestEntry& e) {
    return e.generator && e.generator->find('+') != std::string::npos;
}

// Class list for a scenario: real/fake for detection, sorted base generator
// ids of the training side for tracing.
std::vector<std::string> class_list(Scenario scenario,
                                    const std::vector<ManifestEntry>& entries,
                                    const SplitSpec& split) {
    if (!is_tracing(scenario)) return {"real", "fake"};
    std::set<std::string> ids;
    for (std::size_t i : split.train_indices) ids.insert(base_generator(entries[i]));
    return {ids.begin(), ids.end()};
}

int class_index(const std::vector<std::string>& classes, const std::string& id) {
    auto it = std::find(classes.begin(), classes.end(), id);
    if (it == classes.end())
        throw std::invalid_argument("pipeline: generator '" + id +
                                    "' has no class (unseen in training)");
    return static_cast<int>(it - classes.begin());
}

fs::path checkpoint_base(const PipelineConfig& cfg, Scenario scenario,
                         const std::string& leave_out, std::uint64_t seed) {
    std::string kind = is_tracing(scenario) ? "tracer" : "detector";
    return cfg.checkpoint_dir / (kind + "_" + run_name(scenario, leave_out, seed));
}

struct ScenarioData {
    std::vector<ManifestEntry> entries;
    SplitSpec split;
    std::vector<std::string> classes;
    Standardizer norm;
    std::vector<std::vector<double>> features;

    Tensor input(std::size_t i) const { return norm.apply(features.at(i)); }
};

ScenarioData prepare_scenario(const PipelineConfig& cfg, Scenario scenario,
                              const std::string& leave_out, std::uint64_t seed) {
    ScenarioData d;
    d.entries = load_manifest(cfg.corpus_root / "manifest.jsonl");
    d.split = make_splits(scenario, d.entries, leave_out, seed);
    d.classes = class_list(scenario, d.entries, d.split);
    d.features = corpus_features(cfg, d.entries);
    d.norm = Standardizer::fit(d.features, d.split.train_indices);
    return d;
}

ScenarioReport evaluate_scenario(const PipelineConfig& cfg, const ScenarioData& d,
                                 const Classifier& model, Scenario scenario,
                                 const std::string& leave_out, std::uint64_t seed) {
    ScenarioReport rep;
    rep.scenario = scenario;
    rep.leave_out = leave_out;
    rep.seed = seed;
    rep.fingerprint = d.split.fingerprint(d.entries);
    rep.classes = d.classes;

    const std::size_t k = d.classes.size();
    std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
    std::size_t correct = 0, scored = 0;
    for (std::size_t i : d.split.test_indices) {
        const ManifestEntry& e = d.entries[i];
        Tensor x = d.input(i);
        std::vector<double> logits = model.logits_plain(x);
        std::size_t pred = 0;
        for (std::size_t c = 1; c < logits.size(); ++c)
            if (logits[c] > logits[pred]) pred = c;
        if (is_tracing(scenario) && is_chained(e)) {
            // Two-stage sample: a prediction matching either stage counts.
            std::string a = base_generator(e);
            std::string b = e.generator->substr(e.generator->find('+') + 1);
            ++rep.chained_total;
            ++scored;
            bool hit = d.classes[pred] == a || d.classes[pred] == b;
            rep.chained_hits += hit ? 1 : 0;
            correct += hit ? 1 : 0;
            continue;
        }
        int truth = is_tracing(scenario) ? class_index(d.classes, base_generator(e))
                                         : (e.is_fake() ? 1 : 0);
        if (!is_tracing(scenario)) {
            // Binary path shares the tie-toward-real rule with detect().
            Detection det = detect(model, x);
            pred = det.label == "fake" ? 1 : 0;
        }
        confusion[static_cast<std::size_t>(truth)][pred] += 1;
        ++scored;
        correct += static_cast<std::size_t>(truth) == pred ? 1 : 0;
    }
    rep.eval = report_from_confusion(confusion);
    rep.eval.count = scored;
    rep.eval.accuracy = scored ? static_cast<double>(correct) / scored : 0.0;
    return rep;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw std::runtime_error("pipeline: cannot write " + path.string());
    f << text;
}

}  // namespace

PipelineConfig make_preset(const std::string& name) {
    PipelineConfig cfg;
    cfg.preset = name;
    if (name == "smoke") {
        cfg.per_class = 16;
        cfg.frames = 6;
        cfg.height = cfg.width = 8;
        cfg.gen_hidden = 4;
        cfg.gen_train_steps = 60;
        cfg.train.epochs = 12;
        cfg.train.learning_rate = 3e-3;
        cfg.train.warmup_steps = 50;
        cfg.features.block_size = 4;
        cfg.features.search_radius = 2;
    } else if (name == "full") {
        cfg.per_class = 200;
        cfg.frames = 8;
        cfg.height = cfg.width = 16;
        cfg.gen_hidden = 6;
        cfg.gen_train_steps = 200;
        cfg.train.epochs = 40;
        cfg.train.learning_rate = 2e-3;
        cfg.train.warmup_steps = 200;
        cfg.features.block_size = 8;
        cfg.features.search_radius = 3;
    } else {
        throw std::invalid_argument("make_preset: unknown preset '" + name +
                                    "' (expected smoke|full)");
    }
    return cfg;
}

std::vector<std::string> generator_variants() { return {"ca", "cb", "ua", "ub"}; }

CorpusResult generate_corpus(const PipelineConfig& cfg) {
    fs::create_directories(cfg.corpus_root / "real");
    fs::create_directories(cfg.corpus_root / "fake");
    fs::create_directories(cfg.checkpoint_dir);

    CorpusBuilder b{cfg, {}, {}};
    std::vector<ManifestEntry>& entries = b.result.entries;

    for (const std::string& family : families()) {
        // Reals.
        std::vector<VideoTensor> reals;
        std::vector<std::string> real_paths;
        for (std::size_t i = 0; i < cfg.per_class; ++i) {
            std::string rel = "real/" + family + "_real_" + zero_pad(i) + ".gvfv";
            std::uint64_t s = sub_seed(cfg.seed, "real/" + family + "/" + zero_pad(i));
            reals.push_back(b.ensure_video(cfg.corpus_root / rel, [&] {
                return render_real_video(make_scene(family, s), cfg.frames, cfg.height,
                                         cfg.width);
            }));
            real_paths.push_back(rel);
            ManifestEntry e;
            e.path = rel;
            e.label = "real";
            e.family = family;
            e.frames = cfg.frames;
            e.seed = s;
            entries.push_back(e);
        }
        if (!b.corrupt.empty()) continue;  // keep scanning to list every bad file

        // Generator variants for this family.
        std::map<std::string, ToyGenerator> gens;
        for (const std::string& v : generator_variants())
            gens.emplace(v, load_or_train_generator(cfg, family, v, reals));

        // Fakes: per_class/8 chained, the rest round-robin over the variants.
        const std::size_t n_chained = cfg.per_class / 8;
        const std::size_t n_base = cfg.per_class - n_chained;
        std::size_t cond_cursor = 0;
        const auto variants = generator_variants();
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const std::string& id = variants[v];
            const ToyGenerator& gen = gens.at(id);
            std::size_t n = n_base / variants.size() + (v < n_base % variants.size() ? 1 : 0);
            for (std::size_t i = 0; i < n; ++i) {
                std::string rel = "fake/" + family + "_" + id + "_" + zero_pad(i) + ".gvfv";
                std::uint64_t s =
                    sub_seed(cfg.seed, "fake/" + family + "/" + id + "/" + zero_pad(i));
                ManifestEntry e;
                e.path = rel;
                e.label = "fake";
                e.generator = id;
                e.family = family;
                e.frames = cfg.frames;
                e.seed = s;
                std::optional<Tensor> cond;
                if (gen.config().conditional) {
                    std::size_t src = cond_cursor++ % reals.size();
                    cond = reals[src].frame(0);
                    e.source = real_paths[src];
                }
                b.ensure_video(cfg.corpus_root / rel, [&] { return gen.sample(s, cond); });
                entries.push_back(e);
            }
        }
        for (std::size_t i = 0; i < n_chained; ++i) {
            // Alternate unconditional->conditional stage pairs.
            const std::string ga = i % 2 == 0 ? "ua" : "ub";
            const std::string gb = i % 2 == 0 ? "ca" : "cb";
            std::string id = ga + "+" + gb;
            std::string rel = "fake/" + family + "_" + ga + gb + "_" + zero_pad(i) + ".gvfv";
            std::uint64_t s =
                sub_seed(cfg.seed, "chain/" + family + "/" + id + "/" + zero_pad(i));
            ManifestEntry e;
            e.path = rel;
            e.label = "fake";
            e.generator = id;
            e.family = family;
            e.frames = cfg.frames;
            e.seed = s;
            b.ensure_video(cfg.corpus_root / rel,
                           [&] { return chain_generators(gens.at(ga), gens.at(gb), s); });
            entries.push_back(e);
        }
    }

    if (!b.corrupt.empty()) {
        std::string msg = "generate_corpus: corrupt files:";
        for (const auto& p : b.corrupt) msg += "\n  " + p;
        throw std::runtime_error(msg);
    }

    b.result.manifest_path = cfg.corpus_root / "manifest.jsonl";
    save_manifest(entries, b.result.manifest_path);
    return b.result;
}

std::vector<std::vector<double>> corpus_features(
    const PipelineConfig& cfg, const std::vector<ManifestEntry>& entries) {
    std::vector<std::vector<double>> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        VideoTensor v = load_video(cfg.corpus_root / e.path);
        out.push_back(extract_feature_vector(v, cfg.features));
    }
    return out;
}

std::string scenario_report_to_json(const ScenarioReport& r) {
    json j;
    j["scenario"] = to_string(r.scenario);
    j["leave_out"] = r.leave_out;
    j["seed"] = r.seed;
    j["fingerprint"] = r.fingerprint;
    j["classes"] = r.classes;
    j["eval"] = eval_to_json(r.eval);
    j["chained_total"] = r.chained_total;
    j["chained_hits"] = r.chained_hits;
    j["train_losses"] = r.train_losses;
    return j.dump(2) + "\n";
}

ScenarioReport train_scenario(const PipelineConfig& cfg, Scenario scenario,
                              const std::string& leave_out, std::uint64_t seed) {
    ScenarioData d = prepare_scenario(cfg, scenario, leave_out, seed);

    std::vector<Tensor> inputs;
    std::vector<int> labels;
    for (std::size_t i : d.split.train_indices) {
        const ManifestEntry& e = d.entries[i];
        inputs.push_back(d.input(i));
        labels.push_back(is_tracing(scenario) ? class_index(d.classes, base_generator(e))
                                              : (e.is_fake() ? 1 : 0));
    }

    BackboneSpec spec;
    spec.kind = BackboneKind::FeatureMlp;
    spec.input_dim = feature_vector_length(cfg.features);
    spec.classes = d.classes.size();
    // Tracing is a harder 4-way problem than real/fake detection; give the
    // tracer a wider backbone.
    if (is_tracing(scenario)) spec.hidden = {64, 32};
    Classifier model(spec, sub_seed(seed, "model/" + to_string(scenario)));
    std::vector<double> losses = train_classifier(
        model, inputs, labels, cfg.train, sub_seed(seed, "train/" + to_string(scenario)));

    fs::create_directories(cfg.checkpoint_dir);
    fs::path base = checkpoint_base(cfg, scenario, leave_out, seed);
    model.save(base.string() + ".gvft", base.string() + ".json");

    ScenarioReport rep = evaluate_scenario(cfg, d, model, scenario, leave_out, seed);
    rep.train_losses = losses;
    write_text(cfg.report_dir / ("train_" + run_name(scenario, leave_out, seed) + ".json"),
               scenario_report_to_json(rep));
    return rep;
}

ScenarioReport eval_scenario(const PipelineConfig& cfg, Scenario scenario,
                             const std::string& leave_out, std::uint64_t seed) {
    ScenarioData d = prepare_scenario(cfg, scenario, leave_out, seed);
    fs::path base = checkpoint_base(cfg, scenario, leave_out, seed);
    if (!fs::exists(base.string() + ".gvft"))
        throw std::runtime_error("eval_scenario: missing checkpoint " + base.string() +
                                 ".gvft (train first)");
    Classifier model = Classifier::load(base.string() + ".gvft", base.string() + ".json");
    ScenarioReport rep = evaluate_scenario(cfg, d, model, scenario, leave_out, seed);
    write_text(cfg.report_dir / ("eval_" + run_name(scenario, leave_out, seed) + ".json"),
               scenario_report_to_json(rep));
    return rep;
}

std::vector<ImmunizationRun> run_immunize(const PipelineConfig& cfg, const Tensor& image,
                                          const std::optional<Tensor>& target,
                                          bool directed, std::optional<double> eta_override) {
    if (directed && !target)
        throw std::invalid_argument("run_immunize: directed mode needs a target image");
    if (!directed && target)
        throw std::invalid_argument("run_immunize: undirected mode takes no target image");

    auto fit = [&](const Tensor& img) {
        Tensor luma = img.rank() == 2 ? img : to_luma(img);
        Tensor chw({1, luma.extent(0), luma.extent(1)}, luma.vec());
        if (luma.extent(0) != cfg.height || luma.extent(1) != cfg.width)
            chw = resize_frame_bilinear(chw, cfg.height, cfg.width);
        for (std::size_t i = 0; i < chw.size(); ++i)
            chw[i] = std::clamp(chw[i], 0.0, 1.0);
        return Tensor({cfg.height, cfg.width}, chw.vec());
    };
    Tensor x = fit(image);

    // Frozen next-frame predictor: reuse the checkpoint when present,
    // otherwise train it on the textured reals and store it.
    FramePredictor fp(4, cfg.height, cfg.width, sub_seed(cfg.seed, "predictor"));
    fs::path pck = cfg.checkpoint_dir / "predictor.gvft";
    if (fs::exists(pck)) {
        fp.params() = ParamStore::load(pck);
    } else {
        std::vector<ManifestEntry> entries = load_manifest(cfg.corpus_root / "manifest.jsonl");
        std::vector<VideoTensor> reals;
        for (const auto& e : entries)
            if (!e.is_fake() && e.family == "textured")
                reals.push_back(load_video(cfg.corpus_root / e.path));
        if (reals.empty())
            throw std::runtime_error("run_immunize: no textured reals in the corpus");
        train_frame_predictor(fp, reals, 80, 3e-3, sub_seed(cfg.seed, "predictor-train"));
        fs::create_directories(cfg.checkpoint_dir);
        fp.params().save(pck);
    }
    EncoderPair enc(cfg.height, cfg.width, cfg.encoder_dim, cfg.encoder_dim,
                    sub_seed(cfg.seed, "encoders"), std::move(fp));

    fs::path gck = cfg.checkpoint_dir / "gen_textured_ca.gvft";
    fs::path gsc = cfg.checkpoint_dir / "gen_textured_ca.json";
    if (!fs::exists(gck) || !fs::exists(gsc))
        throw std::runtime_error("run_immunize: missing conditional generator checkpoint " +
                                 gck.string() + " (run gen-corpus first)");
    ToyGenerator gen = ToyGenerator::load(gck, gsc);

    std::optional<Tensor> xt;
    if (target) xt = fit(*target);

    std::vector<double> grid = {2.0 / 255, 4.0 / 255, 8.0 / 255, 16.0 / 255};
    if (eta_override) grid = {*eta_override};
    std::vector<ImmunizationRun> runs;
    fs::create_directories(cfg.report_dir);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        AdversarialBudget budget = cfg.budget;
        budget.eta = grid[k];
        ImmunizationRun run;
        run.eta = grid[k];
        run.defense = directed ? directed_defense(x, *xt, enc, budget)
                               : undirected_defense(x, enc, budget);
        run.report = immunization_report(x, run.defense.immunized, gen,
                                         sub_seed(cfg.seed, "imm/" + std::to_string(k)));
        save_image(run.defense.immunized,
                   cfg.report_dir / ("immunized_eta" + std::to_string(k) + ".pgm"));
        runs.push_back(std::move(run));
    }
    return runs;
}

std::string immunization_runs_to_json(const PipelineConfig& cfg,
                                      const std::vector<ImmunizationRun>& runs,
                                      bool directed) {
    json j;
    j["mode"] = directed ? "directed" : "undirected";
    j["mu"] = cfg.budget.mu;
    j["iterations"] = cfg.budget.iterations;
    j["lambda1"] = cfg.budget.lambda1;
    j["lambda2"] = cfg.budget.lambda2;
    j["runs"] = json::array();
    for (const auto& r : runs) {
        json e;
        e["eta"] = r.eta;
        e["beta_inf"] = r.defense.beta_inf;
        e["initial_d1"] = r.defense.initial_d1;
        e["final_d1"] = r.defense.final_d1;
        e["initial_d2"] = r.defense.initial_d2;
        e["final_d2"] = r.defense.final_d2;
        e["loss_trace"] = r.defense.loss_trace;
        e["between_outputs"] = quality_to_json_obj(r.report.between_outputs);
        e["original_vs_ref"] = quality_to_json_obj(r.report.original_vs_ref);
        e["immunized_vs_ref"] = quality_to_json_obj(r.report.immunized_vs_ref);
        e["motion_original"] = r.report.motion_original;
        e["motion_immunized"] = r.report.motion_immunized;
        e["motion_delta"] = r.report.motion_delta;
        j["runs"].push_back(e);
    }
    return j.dump(2) + "\n";
}

QualityReport run_quality(const fs::path& video_a, const fs::path& video_b) {
    VideoTensor a = load_video(video_a);
    VideoTensor b = load_video(video_b);
    return video_quality(a, b,
                         [](const Tensor& x, const Tensor& y) { return perceptual_proxy(x, y); });
}

std::string quality_report_to_json(const QualityReport& r) {
    return quality_to_json_obj(r).dump(2) + "\n";
}

std::map<std::string, std::string> make_plots(const PipelineConfig& cfg) {
    std::vector<ManifestEntry> entries = load_manifest(cfg.corpus_root / "manifest.jsonl");
    std::map<std::string, std::string> out;

    // Mean first-frame log spectra, real vs fake.
    Tensor real_acc({cfg.height, cfg.width}), fake_acc({cfg.height, cfg.width});
    std::size_t n_real = 0, n_fake = 0;
    for (const auto& e : entries) {
        VideoTensor v = load_video(cfg.corpus_root / e.path);
        Tensor sp = frame_spectrum(to_luma(v.frame(0)));
        Tensor& acc = e.is_fake() ? fake_acc : real_acc;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sp[i];
        (e.is_fake() ? n_fake : n_real) += 1;
    }
    if (n_real == 0 || n_fake == 0)
        throw std::runtime_error("make_plots: corpus lacks real or fake samples");
    for (std::size_t i = 0; i < real_acc.size(); ++i) real_acc[i] /= n_real;
    for (std::size_t i = 0; i < fake_acc.size(); ++i) fake_acc[i] /= n_fake;
    out["spectrum_real.svg"] = svg_heatmap(real_acc, "mean log spectrum: real", 12);
    out["spectrum_fake.svg"] = svg_heatmap(fake_acc, "mean log spectrum: fake", 12);

    // Motion PCA: fakes grouped by generator, plus a rendered still-anchor
    // cluster (ground-truth no-motion reference).
    std::map<std::string, std::vector<std::vector<double>>> by_group;
    for (const auto& e : entries) {
        if (!e.is_fake()) continue;
        VideoTensor v = load_video(cfg.corpus_root / e.path);
        by_group[*e.generator].push_back(motion_descriptor(v, cfg.features));
    }
    std::vector<std::vector<double>> anchors;
    for (std::size_t i = 0; i < 12; ++i) {
        SceneSpec sc = make_scene(families()[i % 2], sub_seed(cfg.seed, "anchor/" + zero_pad(i)),
                                  /*force_still=*/true);
        anchors.push_back(
            motion_descriptor(render_real_video(sc, cfg.frames, cfg.height, cfg.width),
                              cfg.features));
    }
    std::vector<std::vector<double>> all;
    for (const auto& [id, pts] : by_group) all.insert(all.end(), pts.begin(), pts.end());
    all.insert(all.end(), anchors.begin(), anchors.end());
    PcaBasis basis = pca_fit(all, 2);
    std::vector<ScatterGroup> groups;
    for (const auto& [id, pts] : by_group) {
        ScatterGroup g;
        g.label = id;
        for (const auto& p : pts) {
            auto pr = pca_project(basis, p);
            g.points.emplace_back(pr[0], pr[1]);
        }
        groups.push_back(std::move(g));
    }
    ScatterGroup anchor;
    anchor.label = "still";
    anchor.anchor = true;
    for (const auto& p : anchors) {
        auto pr = pca_project(basis, p);
        anchor.points.emplace_back(pr[0], pr[1]);
    }
    groups.push_back(std::move(anchor));
    out["motion_pca.svg"] = svg_scatter(groups, "motion descriptors, PCA");

    // Accuracy bars + loss curves from the report directory.
    std::vector<fs::path> report_files;
    if (fs::exists(cfg.report_dir))
        for (const auto& p : fs::directory_iterator(cfg.report_dir))
            if (p.path().extension() == ".json") report_files.push_back(p.path());
    std::sort(report_files.begin(), report_files.end());

    std::vector<std::string> bar_labels;
    std::vector<double> bar_values;
    std::vector<LineSeries> curves;
    for (const auto& p : report_files) {
        std::string stem = p.stem().string();
        bool is_eval = stem.rfind("eval_", 0) == 0;
        bool is_train = stem.rfind("train_", 0) == 0;
        if (!is_eval && !is_train) continue;
        std::ifstream f(p);
        json j = json::parse(f);
        if (is_eval) {
            bar_labels.push_back(stem.substr(5));
            bar_values.push_back(j.at("eval").at("accuracy").get<double>());
        } else if (j.contains("train_losses") && !j["train_losses"].empty()) {
            LineSeries s;
            s.label = stem.substr(6);
            s.values = j["train_losses"].get<std::vector<double>>();
            curves.push_back(std::move(s));
        }
    }
    if (bar_labels.empty() && curves.empty())
        throw std::runtime_error("make_plots: no eval/train reports under " +
                                 cfg.report_dir.string());
    if (!bar_labels.empty())
        out["accuracy.svg"] = svg_bars(bar_labels, bar_values, "test accuracy per run");
    if (!curves.empty()) out["loss_curves.svg"] = svg_lines(curves, "training loss");
    return out;
}

}  // namespace gvf
