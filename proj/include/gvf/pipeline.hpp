#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvf/classifier.hpp"
#include "gvf/defense.hpp"
#include "gvf/features.hpp"
#include "gvf/manifest.hpp"
#include "gvf/quality.hpp"
#include "gvf/splits.hpp"

namespace gvf {

// End-to-end orchestration: corpus generation, scenario training/evaluation,
// immunization and plotting. Every function is a pure function of its config
// (all randomness derives from config.seed), so reruns into a fresh root
// reproduce byte-identical artifacts.

struct PipelineConfig {
    std::string preset = "smoke";  // "smoke" (CI scale) | "full" (desk scale)
    std::filesystem::path corpus_root = "corpus";
    std::filesystem::path checkpoint_dir = "checkpoints";
    std::filesystem::path report_dir = "reports";
    std::uint64_t seed = 0;

    // Corpus scale; filled in by make_preset.
    std::size_t per_class = 16;  // reals per family; fakes per family match
    std::size_t frames = 6;
    std::size_t height = 8, width = 8;

    // Generator training.
    std::size_t gen_hidden = 4;
    std::size_t gen_train_steps = 60;
    double gen_learning_rate = 3e-3;

    // Detector / tracer training.
    ClassifierTrainConfig train;
    FeatureConfig features;

    // Immunization.
    AdversarialBudget budget;
    std::size_t encoder_dim = 8;  // d1 = d2
};

// "smoke": 16 per class on 8x8 videos; "full": 200 per class on 16x16.
// Throws on unknown names.
PipelineConfig make_preset(const std::string& name);

// The four generator variants trained per family. Ids are shared across
// families (the d-blind scenario requires equal generator sets); variants
// starting with 'c' are first-frame conditional.
std::vector<std::string> generator_variants();

struct CorpusResult {
    std::vector<ManifestEntry> entries;
    std::filesystem::path manifest_path;
    std::size_t rendered = 0;  // videos produced this run
    std::size_t reused = 0;    // valid files found from an earlier partial run
};

// Renders reals, trains (or reloads) the generator variants per family,
// samples fakes (including first-frame-conditioned and chained two-stage
// ones) and writes the manifest. Resumable: existing readable files are kept;
// corrupt ones abort with a message listing every bad path.
CorpusResult generate_corpus(const PipelineConfig& cfg);

// Feature vectors for each manifest entry, in manifest order.
std::vector<std::vector<double>> corpus_features(const PipelineConfig& cfg,
                                                 const std::vector<ManifestEntry>& entries);

struct ScenarioReport {
    Scenario scenario = Scenario::Targeted;
    std::string leave_out;
    std::uint64_t seed = 0;
    std::string fingerprint;           // split fingerprint over manifest paths
    std::vector<std::string> classes;  // ["real","fake"] or generator ids
    EvalReport eval;
    std::vector<double> train_losses;  // per epoch; empty for eval-only runs
    // Tracing only: chained two-stage samples are scored per stage (a
    // prediction matching either stage counts) and kept out of the confusion
    // matrix.
    std::size_t chained_total = 0, chained_hits = 0;
};

std::string scenario_report_to_json(const ScenarioReport& r);

// Trains a classifier on the scenario's train split and writes
//   <checkpoint_dir>/<kind>_<scenario>[_<leave_out>]_seed<seed>.{gvft,json}
//   <report_dir>/train_<...>.json
// Detection scenarios train a binary detector; tracing scenarios a
// generator-id tracer. Both run on forensic feature vectors standardized by
// train-split statistics (recomputed at eval time from the same split).
ScenarioReport train_scenario(const PipelineConfig& cfg, Scenario scenario,
                              const std::string& leave_out, std::uint64_t seed);

// Recreates the split, loads the checkpoint written by train_scenario and
// evaluates the test side; writes <report_dir>/eval_<...>.json.
ScenarioReport eval_scenario(const PipelineConfig& cfg, Scenario scenario,
                             const std::string& leave_out, std::uint64_t seed);

struct ImmunizationRun {
    double eta = 0.0;
    DefenseResult defense;
    ImmunizationReport report;
};

// Runs the defense over the eta grid {2,4,8,16}/255 (budget.mu/iterations/
// lambdas from cfg.budget), or over the single value in `eta_override`.
// `target` must be set in directed mode and absent otherwise. The conditional
// generator and next-frame predictor come from the corpus checkpoints. Writes
// per-eta immunized images under report_dir; returns the runs in grid order.
std::vector<ImmunizationRun> run_immunize(const PipelineConfig& cfg, const Tensor& image,
                                          const std::optional<Tensor>& target,
                                          bool directed,
                                          std::optional<double> eta_override = std::nullopt);

std::string immunization_runs_to_json(const PipelineConfig& cfg,
                                      const std::vector<ImmunizationRun>& runs,
                                      bool directed);

// Quality comparison of two stored videos (with the perceptual proxy).
QualityReport run_quality(const std::filesystem::path& video_a,
                          const std::filesystem::path& video_b);
std::string quality_report_to_json(const QualityReport& r);

// Deterministic plot set: mean real/fake spectrum heatmaps, the motion-PCA
// scatter with the still-anchor cluster, an accuracy bar chart over the eval
// reports under report_dir, and training loss curves. Returns filename ->
// SVG document. Throws if the corpus is missing or no reports exist.
std::map<std::string, std::string> make_plots(const PipelineConfig& cfg);

}  // namespace gvf
