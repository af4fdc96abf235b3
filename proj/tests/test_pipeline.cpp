#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gvf/manifest.hpp"
#include "gvf/pipeline.hpp"
#include "gvf/svg.hpp"
#include "gvf/video.hpp"

using namespace gvf;
namespace fs = std::filesystem;

namespace {

PipelineConfig smoke_config(const fs::path& root, std::uint64_t seed = 5) {
    PipelineConfig cfg = make_preset("smoke");
    cfg.seed = seed;
    cfg.corpus_root = root / "corpus";
    cfg.checkpoint_dir = root / "ckpt";
    cfg.report_dir = root / "reports";
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("generate_corpus lays out the preset corpus deterministically") {
    fs::path root = fresh_dir("gvf_pipe_corpus");
    PipelineConfig cfg = smoke_config(root);
    CorpusResult r = generate_corpus(cfg);

    SUBCASE("entry count and label balance match the preset") {
        // 2 families x per_class(16) x {real, fake}
        CHECK(r.entries.size() == 64);
        std::size_t reals = 0, fakes = 0, chained = 0, conditioned = 0;
        for (const auto& e : r.entries) {
            (e.is_fake() ? fakes : reals)++;
            if (e.is_fake()) {
                REQUIRE(e.generator.has_value());
                if (e.generator->find('+') != std::string::npos) ++chained;
            }
            if (e.source) ++conditioned;
        }
        CHECK(reals == 32);
        CHECK(fakes == 32);
        CHECK(chained == 4);  // per_class/8 per family
        CHECK(conditioned > 0);
    }

    SUBCASE("conditioned fakes point at a real sample that exists") {
        std::set<std::string> real_paths;
        for (const auto& e : r.entries)
            if (!e.is_fake()) real_paths.insert(e.path);
        for (const auto& e : r.entries)
            if (e.source) CHECK(real_paths.count(*e.source) == 1);
    }

    SUBCASE("a second run reuses every stored video and keeps the manifest bytes") {
        std::string manifest_before = slurp(r.manifest_path);
        CorpusResult again = generate_corpus(cfg);
        CHECK(again.rendered == 0);
        CHECK(again.reused == again.entries.size());
        CHECK(slurp(again.manifest_path) == manifest_before);
    }

    SUBCASE("a corrupt stored video is reported by path") {
        fs::path victim = cfg.corpus_root / r.entries.front().path;
        std::ofstream(victim, std::ios::binary) << "garbage";
        try {
            generate_corpus(cfg);
            FAIL("expected corrupt-file error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find(r.entries.front().path) != std::string::npos);
        }
    }
}

TEST_CASE("train_scenario then eval_scenario reproduce the same report") {
    fs::path root = fresh_dir("gvf_pipe_scenario");
    PipelineConfig cfg = smoke_config(root);
    generate_corpus(cfg);

    ScenarioReport trained = train_scenario(cfg, Scenario::Targeted, "", cfg.seed);
    CHECK(trained.eval.accuracy >= 0.5);
    CHECK_FALSE(trained.train_losses.empty());

    ScenarioReport evaled = eval_scenario(cfg, Scenario::Targeted, "", cfg.seed);
    CHECK(evaled.eval.accuracy == trained.eval.accuracy);
    CHECK(evaled.fingerprint == trained.fingerprint);
    CHECK(fs::exists(root / "reports" / "train_targeted_seed5.json"));
    CHECK(fs::exists(root / "reports" / "eval_targeted_seed5.json"));

    SUBCASE("tracing classes are the four base generator ids") {
        ScenarioReport tr = train_scenario(cfg, Scenario::TraceDataAware, "", cfg.seed);
        CHECK(tr.classes == std::vector<std::string>{"ca", "cb", "ua", "ub"});
    }
}

TEST_CASE("svg helpers emit parseable, deterministic markup") {
    SUBCASE("bar values round-trip through the data attributes") {
        std::string svg = svg_bars({"a", "b", "c"}, {0.25, 1.0, 0.625}, "bars");
        std::vector<double> got = svg_parse_bar_values(svg);
        REQUIRE(got.size() == 3);
        CHECK(got[0] == doctest::Approx(0.25));
        CHECK(got[1] == doctest::Approx(1.0));
        CHECK(got[2] == doctest::Approx(0.625));
    }

    SUBCASE("identical inputs give byte-identical documents") {
        Tensor grid({3, 4});
        for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 11.0;
        CHECK(svg_heatmap(grid, "t") == svg_heatmap(grid, "t"));
        std::vector<ScatterGroup> groups = {{"g1", {{0.0, 1.0}, {0.5, 0.25}}, false},
                                            {"anchor", {{0.1, 0.1}}, true}};
        CHECK(svg_scatter(groups, "s") == svg_scatter(groups, "s"));
        std::vector<LineSeries> series = {{"loss", {1.0, 0.5, 0.25}}};
        CHECK(svg_lines(series, "l") == svg_lines(series, "l"));
    }

    SUBCASE("titles are XML-escaped") {
        std::string svg = svg_bars({"x"}, {1.0}, "a<b&c");
        CHECK(svg.find("a<b&c") == std::string::npos);
        CHECK(svg.find("a&lt;b&amp;c") != std::string::npos);
    }
}

TEST_CASE("make_plots renders one document per figure from stored reports") {
    fs::path root = fresh_dir("gvf_pipe_plots");
    PipelineConfig cfg = smoke_config(root);
    generate_corpus(cfg);
    train_scenario(cfg, Scenario::Targeted, "", cfg.seed);

    auto plots = make_plots(cfg);
    CHECK(plots.size() >= 4);
    for (const auto& [name, svg] : plots) {
        CHECK(name.size() > 4);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.rfind("</svg>") != std::string::npos);
    }
}
