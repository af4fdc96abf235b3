#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gvf/pipeline.hpp"
#include "gvf/video.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Options collected from --config and flags; flags win.
struct CliOptions {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string corpus_root, checkpoint_dir, report_dir;
    std::string scenario, leave_out;
    std::string mode = "undirected";
    std::string target_image, input_image;
    std::string out;
    std::optional<double> eta;
};

void add_common(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON config file; flags override its keys");
    cmd->add_option("--seed", o.seed, "run seed (required here or in the config)");
    cmd->add_option("--preset", o.preset, "corpus preset: smoke|full");
    cmd->add_option("--corpus-root", o.corpus_root, "corpus directory");
    cmd->add_option("--checkpoint-dir", o.checkpoint_dir, "checkpoint directory");
    cmd->add_option("--report-dir", o.report_dir, "report directory");
    cmd->add_option("--out", o.out, "output path override");
}

// Builds the pipeline config: preset defaults, then config-file keys, then
// flags. The seed must come from the config file or --seed; there is no
// wall-clock fallback.
gvf::PipelineConfig resolve_config(const CliOptions& o) {
    json j = json::object();
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) throw std::runtime_error("cannot open config " + o.config_path);
        j = json::parse(f);
    }
    std::string preset = !o.preset.empty() ? o.preset : j.value("preset", "smoke");
    gvf::PipelineConfig cfg = gvf::make_preset(preset);

    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    std::string corpus = cfg.corpus_root.string(), ckpt = cfg.checkpoint_dir.string(),
                report = cfg.report_dir.string();
    get("corpus_root", corpus);
    get("checkpoint_dir", ckpt);
    get("report_dir", report);
    get("per_class", cfg.per_class);
    get("frames", cfg.frames);
    get("height", cfg.height);
    get("width", cfg.width);
    get("gen_hidden", cfg.gen_hidden);
    get("gen_train_steps", cfg.gen_train_steps);
    get("gen_learning_rate", cfg.gen_learning_rate);
    get("epochs", cfg.train.epochs);
    get("batch_size", cfg.train.batch_size);
    get("learning_rate", cfg.train.learning_rate);
    get("warmup_steps", cfg.train.warmup_steps);
    get("encoder_dim", cfg.encoder_dim);
    get("mu", cfg.budget.mu);
    get("iterations", cfg.budget.iterations);
    get("lambda1", cfg.budget.lambda1);
    get("lambda2", cfg.budget.lambda2);
    get("cosine", cfg.budget.cosine);

    if (!o.corpus_root.empty()) corpus = o.corpus_root;
    if (!o.checkpoint_dir.empty()) ckpt = o.checkpoint_dir;
    if (!o.report_dir.empty()) report = o.report_dir;
    cfg.corpus_root = corpus;
    cfg.checkpoint_dir = ckpt;
    cfg.report_dir = report;

    if (o.seed) {
        cfg.seed = *o.seed;
    } else if (j.contains("seed")) {
        cfg.seed = j.at("seed").get<std::uint64_t>();
    } else {
        throw std::runtime_error("a seed is required (--seed or config \"seed\")");
    }
    cfg.budget.seed = cfg.seed;
    return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

int run(int argc, char** argv) {
    CLI::App app{"generated-video forensics toolkit"};
    app.require_subcommand(1);
    CliOptions o;

    auto* gen = app.add_subcommand("gen-corpus", "render reals, train generators, sample fakes");
    add_common(gen, o);

    auto* traind = app.add_subcommand("train-detector", "train a real/fake detector");
    add_common(traind, o);
    traind->add_option("--scenario", o.scenario, "targeted|d-blind|m-blind|open")
        ->required();
    traind->add_option("--leave-out", o.leave_out, "generator held out (m-blind/open)");

    auto* traint = app.add_subcommand("train-tracer", "train a source tracer");
    add_common(traint, o);
    traint->add_option("--scenario", o.scenario, "trace-data-aware|trace-data-agnostic")
        ->required();

    auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint on its split");
    add_common(eval, o);
    eval->add_option("--scenario", o.scenario, "any scenario")->required();
    eval->add_option("--leave-out", o.leave_out, "generator held out (m-blind/open)");

    auto* imm = app.add_subcommand("immunize", "PGD-immunize an image over the eta grid");
    add_common(imm, o);
    imm->add_option("--mode", o.mode, "directed|undirected")
        ->check(CLI::IsMember({"directed", "undirected"}));
    imm->add_option("--target-image", o.target_image, "semantic target (directed mode)");
    imm->add_option("--input-image", o.input_image,
                    "image to immunize (default: first textured real's first frame)");
    imm->add_option("--eta", o.eta, "single eta overriding the {2,4,8,16}/255 grid");

    auto* qual = app.add_subcommand("quality", "SSIM/PSNR/proxy between two stored videos");
    add_common(qual, o);
    std::string video_a, video_b;
    qual->add_option("video_a", video_a, "first video (raw file or frame directory)")
        ->required();
    qual->add_option("video_b", video_b, "second video")->required();

    auto* plot = app.add_subcommand("plot", "emit SVG plots from the corpus and reports");
    add_common(plot, o);

    CLI11_PARSE(app, argc, argv);

    gvf::PipelineConfig cfg = resolve_config(o);

    if (gen->parsed()) {
        gvf::CorpusResult r = gvf::generate_corpus(cfg);
        std::cout << "manifest " << r.manifest_path.string() << " entries "
                  << r.entries.size() << " rendered " << r.rendered << " reused " << r.reused
                  << "\n";
        return 0;
    }
    if (traind->parsed() || traint->parsed() || eval->parsed()) {
        gvf::Scenario sc = gvf::scenario_from_string(o.scenario);
        if (traind->parsed() && gvf::is_tracing(sc))
            throw std::runtime_error("train-detector takes detection scenarios only");
        if (traint->parsed() && !gvf::is_tracing(sc))
            throw std::runtime_error("train-tracer takes tracing scenarios only");
        gvf::ScenarioReport rep =
            eval->parsed() ? gvf::eval_scenario(cfg, sc, o.leave_out, cfg.seed)
                           : gvf::train_scenario(cfg, sc, o.leave_out, cfg.seed);
        std::cout << to_string(rep.scenario) << " accuracy " << rep.eval.accuracy
                  << " fingerprint " << rep.fingerprint << "\n";
        return 0;
    }
    if (imm->parsed()) {
        bool directed = o.mode == "directed";
        if (directed && o.target_image.empty())
            throw std::runtime_error("directed mode requires --target-image");
        gvf::Tensor x;
        if (!o.input_image.empty()) {
            x = gvf::load_image(o.input_image);
        } else {
            auto entries = gvf::load_manifest(cfg.corpus_root / "manifest.jsonl");
            auto it = std::find_if(entries.begin(), entries.end(), [](const auto& e) {
                return !e.is_fake() && e.family == "textured";
            });
            if (it == entries.end())
                throw std::runtime_error("no textured real in the corpus; pass --input-image");
            x = gvf::load_video(cfg.corpus_root / it->path).frame(0);
        }
        std::optional<gvf::Tensor> target;
        if (directed) target = gvf::load_image(o.target_image);
        std::vector<gvf::ImmunizationRun> runs =
            gvf::run_immunize(cfg, x, target, directed, o.eta);
        fs::path out = o.out.empty() ? cfg.report_dir / "immunize.json" : fs::path(o.out);
        write_file(out, gvf::immunization_runs_to_json(cfg, runs, directed));
        std::cout << "immunize " << o.mode << " runs " << runs.size() << " report "
                  << out.string() << "\n";
        return 0;
    }
    if (qual->parsed()) {
        gvf::QualityReport r = gvf::run_quality(video_a, video_b);
        std::string text = gvf::quality_report_to_json(r);
        if (!o.out.empty()) write_file(o.out, text);
        std::cout << text;
        return 0;
    }
    if (plot->parsed()) {
        auto plots = gvf::make_plots(cfg);
        fs::path out_dir = o.out.empty() ? cfg.report_dir : fs::path(o.out);
        for (const auto& [name, svg] : plots) write_file(out_dir / name, svg);
        std::cout << "plots " << plots.size() << " -> " << out_dir.string() << "\n";
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
