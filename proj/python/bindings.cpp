// Python surface for the forensics toolkit: rendering, feature extraction,
// the scenario pipeline, immunization and quality metrics. Tensors cross the
// boundary as contiguous float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gvf/defense.hpp"
#include "gvf/features.hpp"
#include "gvf/pipeline.hpp"
#include "gvf/quality.hpp"
#include "gvf/scene.hpp"
#include "gvf/video.hpp"

namespace py = pybind11;
using namespace gvf;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[i] = static_cast<std::size_t>(a.shape(i));
    Tensor t(shape);
    const double* src = a.data();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = src[i];
    return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> a(shape);
    double* dst = a.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) dst[i] = t[i];
    return a;
}

VideoTensor video_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 4) throw std::invalid_argument("video array must be [T,C,H,W]");
    return VideoTensor(tensor_from_array(a));
}

EncoderPair default_encoders(const PipelineConfig& cfg) {
    FramePredictor fp(4, cfg.height, cfg.width, cfg.seed ^ 0xF00Dull);
    return EncoderPair(cfg.height, cfg.width, cfg.encoder_dim, cfg.encoder_dim, cfg.seed,
                       std::move(fp));
}

}  // namespace

PYBIND11_MODULE(gvfpy, m) {
    m.doc() = "generated-video forensics: detection, tracing, immunization, quality";

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def_readwrite("preset", &PipelineConfig::preset)
        .def_readwrite("corpus_root", &PipelineConfig::corpus_root)
        .def_readwrite("checkpoint_dir", &PipelineConfig::checkpoint_dir)
        .def_readwrite("report_dir", &PipelineConfig::report_dir)
        .def_readwrite("seed", &PipelineConfig::seed)
        .def_readwrite("per_class", &PipelineConfig::per_class)
        .def_readwrite("frames", &PipelineConfig::frames)
        .def_readwrite("height", &PipelineConfig::height)
        .def_readwrite("width", &PipelineConfig::width);

    m.def("make_preset", &make_preset, py::arg("name"),
          "Pipeline configuration for the 'smoke' or 'full' preset");
    m.def("generator_variants", &generator_variants);

    m.def(
        "generate_corpus",
        [](PipelineConfig& cfg) {
            CorpusResult r = generate_corpus(cfg);
            py::dict d;
            d["manifest_path"] = r.manifest_path.string();
            d["entries"] = r.entries.size();
            d["rendered"] = r.rendered;
            d["reused"] = r.reused;
            return d;
        },
        py::arg("config"));

    py::enum_<Scenario>(m, "Scenario")
        .value("TARGETED", Scenario::Targeted)
        .value("D_BLIND", Scenario::DBlind)
        .value("OPEN", Scenario::Open)
        .value("TRACE_DATA_AWARE", Scenario::TraceDataAware)
        .value("TRACE_DATA_AGNOSTIC", Scenario::TraceDataAgnostic);

    auto report_dict = [](const ScenarioReport& r) {
        py::dict d;
        d["scenario"] = to_string(r.scenario);
        d["seed"] = r.seed;
        d["classes"] = r.classes;
        d["accuracy"] = r.eval.accuracy;
        d["fpr"] = r.eval.fpr;
        d["fnr"] = r.eval.fnr;
        d["fingerprint"] = r.fingerprint;
        return d;
    };
    m.def(
        "train_scenario",
        [report_dict](const PipelineConfig& cfg, Scenario sc, const std::string& leave_out,
                      std::uint64_t seed) { return report_dict(train_scenario(cfg, sc, leave_out, seed)); },
        py::arg("config"), py::arg("scenario"), py::arg("leave_out") = "", py::arg("seed"));
    m.def(
        "eval_scenario",
        [report_dict](const PipelineConfig& cfg, Scenario sc, const std::string& leave_out,
                      std::uint64_t seed) { return report_dict(eval_scenario(cfg, sc, leave_out, seed)); },
        py::arg("config"), py::arg("scenario"), py::arg("leave_out") = "", py::arg("seed"));

    // rendering and video IO
    m.def(
        "render_video",
        [](const std::string& family, std::uint64_t seed, std::size_t frames, std::size_t h,
           std::size_t w, bool still) {
            return array_from_tensor(
                render_real_video(make_scene(family, seed, still), frames, h, w).data);
        },
        py::arg("family"), py::arg("seed"), py::arg("frames"), py::arg("height"),
        py::arg("width"), py::arg("still") = false,
        "Procedural reference clip as a [T,C,H,W] array in [0,1]");
    m.def(
        "load_video",
        [](const std::filesystem::path& p) { return array_from_tensor(load_video(p).data); },
        py::arg("path"));
    m.def(
        "save_video",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const std::filesystem::path& p) { save_video_raw(video_from_array(a), p); },
        py::arg("video"), py::arg("path"));

    // forensic features
    m.def(
        "frame_spectrum",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            return array_from_tensor(frame_spectrum(tensor_from_array(a)));
        },
        py::arg("frame_hw"));
    m.def(
        "hf_energy_ratio",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           double cutoff) { return hf_energy_ratio(tensor_from_array(a), cutoff); },
        py::arg("frame_hw"), py::arg("cutoff") = 0.5);
    m.def(
        "temporal_hf_dispersion",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           double cutoff) { return temporal_hf_dispersion(video_from_array(a), cutoff); },
        py::arg("video"), py::arg("cutoff") = 0.5);
    m.def(
        "motion_descriptor",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           std::size_t block_size, std::size_t search_radius) {
            FeatureConfig fc;
            fc.block_size = block_size;
            fc.search_radius = search_radius;
            return motion_descriptor(video_from_array(a), fc);
        },
        py::arg("video"), py::arg("block_size") = 8, py::arg("search_radius") = 3);
    m.def(
        "extract_features",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            return extract_feature_vector(video_from_array(a), FeatureConfig{});
        },
        py::arg("video"));
    m.def("feature_names", [] { return feature_index_map(FeatureConfig{}); });

    // quality metrics
    m.def(
        "ssim",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return ssim(tensor_from_array(a), tensor_from_array(b));
        },
        py::arg("frame_a"), py::arg("frame_b"));
    m.def(
        "psnr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return psnr(tensor_from_array(a), tensor_from_array(b));
        },
        py::arg("frame_a"), py::arg("frame_b"));

    // immunization
    py::class_<AdversarialBudget>(m, "AdversarialBudget")
        .def(py::init<>())
        .def_readwrite("eta", &AdversarialBudget::eta)
        .def_readwrite("mu", &AdversarialBudget::mu)
        .def_readwrite("iterations", &AdversarialBudget::iterations)
        .def_readwrite("lambda1", &AdversarialBudget::lambda1)
        .def_readwrite("lambda2", &AdversarialBudget::lambda2)
        .def_readwrite("seed", &AdversarialBudget::seed);

    auto defense_dict = [](const DefenseResult& r) {
        py::dict d;
        d["immunized"] = array_from_tensor(r.immunized);
        d["loss_trace"] = r.loss_trace;
        d["initial_d1"] = r.initial_d1;
        d["final_d1"] = r.final_d1;
        d["initial_d2"] = r.initial_d2;
        d["final_d2"] = r.final_d2;
        d["beta_inf"] = r.beta_inf;
        return d;
    };
    m.def(
        "directed_defense",
        [defense_dict](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                       const py::array_t<double, py::array::c_style | py::array::forcecast>& xt,
                       const AdversarialBudget& budget, const PipelineConfig& cfg) {
            EncoderPair enc = default_encoders(cfg);
            return defense_dict(
                directed_defense(tensor_from_array(x), tensor_from_array(xt), enc, budget));
        },
        py::arg("image"), py::arg("target"), py::arg("budget"), py::arg("config"));
    m.def(
        "undirected_defense",
        [defense_dict](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                       const AdversarialBudget& budget, const PipelineConfig& cfg) {
            EncoderPair enc = default_encoders(cfg);
            return defense_dict(undirected_defense(tensor_from_array(x), enc, budget));
        },
        py::arg("image"), py::arg("budget"), py::arg("config"));
}
