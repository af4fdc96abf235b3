#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "gvf/classifier.hpp"
#include "gvf/gradcam.hpp"
#include "gvf/rng.hpp"
#include "gvf/splits.hpp"
#include "test_helpers.hpp"

using namespace gvf;

namespace {

BackboneSpec mlp_spec(std::size_t dim = 6, std::size_t classes = 2) {
    BackboneSpec s;
    s.kind = BackboneKind::FeatureMlp;
    s.input_dim = dim;
    s.hidden = {8, 4};
    s.classes = classes;
    return s;
}

BackboneSpec conv_spec(std::size_t classes = 2) {
    BackboneSpec s;
    s.kind = BackboneKind::Conv3d;
    s.conv_channels = 3;
    s.conv_blocks = 2;
    s.frames = 8;
    s.height = 8;
    s.width = 8;
    s.classes = classes;
    return s;
}

// Two linearly separable feature clusters.
void toy_feature_data(std::size_t n_per_class, std::size_t dim, std::uint64_t seed,
                      std::vector<Tensor>& xs, std::vector<int>& ys) {
    Rng rng(seed);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        int label = i < n_per_class ? 0 : 1;
        Tensor x = rng.gaussian_tensor({dim}, 0.3);
        for (std::size_t d = 0; d < dim; ++d) x[d] += label ? 1.0 : -1.0;
        xs.push_back(std::move(x));
        ys.push_back(label);
    }
}

std::vector<ManifestEntry> toy_manifest(std::size_t per_cell) {
    std::vector<ManifestEntry> es;
    std::size_t id = 0;
    for (const std::string& fam : {"smooth", "textured"}) {
        for (std::size_t i = 0; i < 2 * per_cell; ++i) {
            ManifestEntry e;
            e.path = fam + "/real_" + std::to_string(i) + ".gvfv";
            e.label = "real";
            e.family = fam;
            e.frames = 16;
            e.seed = id++;
            es.push_back(e);
        }
        for (const std::string& gen : {"g0", "g1", "g2", "g3"}) {
            for (std::size_t i = 0; i < per_cell; ++i) {
                ManifestEntry e;
                e.path = fam + "/" + gen + "_" + std::to_string(i) + ".gvfv";
                e.label = "fake";
                e.generator = gen;
                e.family = fam;
                e.frames = 16;
                e.seed = id++;
                es.push_back(e);
            }
        }
    }
    return es;
}

}  // namespace

TEST_CASE("build_model") {
    SUBCASE("same seed and spec give identical parameters") {
        Classifier a(mlp_spec(), 7), b(mlp_spec(), 7);
        for (const auto& name : a.params().names())
            CHECK(a.params().at(name).vec() == b.params().at(name).vec());
    }
    SUBCASE("mlp parameter count matches the closed form") {
        BackboneSpec s = mlp_spec(6, 3);
        Classifier m(s, 1);
        // 8*6+8 + 4*8+4 + 3*4+3 = 56+36+15
        CHECK(Classifier::expected_parameter_count(s) == 107);
        CHECK(m.parameter_count() == 107);
    }
    SUBCASE("conv3d parameter count matches the closed form") {
        BackboneSpec s = conv_spec();
        Classifier m(s, 1);
        // blocks: 3*1*27+3 + 3*3*27+3 = 84+246; head: flat = 3*2*2*2 = 24 -> 2*24+2
        CHECK(Classifier::expected_parameter_count(s) == 84 + 246 + 50);
        CHECK(m.parameter_count() == 84 + 246 + 50);
    }
    SUBCASE("head output dimension equals class count") {
        Classifier m(mlp_spec(6, 5), 3);
        Rng rng(2);
        CHECK(m.logits_plain(rng.gaussian_tensor({6})).size() == 5);
    }
    SUBCASE("class count below 2 rejected") {
        BackboneSpec s = mlp_spec();
        s.classes = 1;
        CHECK_THROWS_AS(Classifier(s, 1), std::invalid_argument);
    }
}

TEST_CASE("classifier gradients match finite differences") {
    Rng rng(5);
    SUBCASE("feature-mlp cross-entropy") {
        Classifier m(mlp_spec(4), 11);
        Tensor xb = rng.gaussian_tensor({3, 4});
        std::vector<int> labels = {0, 1, 0};
        for (const std::string& pname : {"fc0_w", "head_w", "fc1_b"}) {
            ad::Tape tape;
            auto bound = m.bind_params(tape, true);
            ad::Var xv = tape.leaf(xb, false, "x");
            ad::Var loss = ad::cross_entropy(tape, m.logits_features(tape, xv, bound), labels);
            tape.backward(loss);
            Tensor analytic = tape.grad(bound.at(pname));
            Tensor saved = m.params().at(pname);
            auto f = [&](const Tensor& pv) {
                m.params().at(pname) = pv;
                ad::Tape t2;
                auto b2 = m.bind_params(t2, false);
                ad::Var x2 = t2.leaf(xb, false, "x");
                double out =
                    t2.value(ad::cross_entropy(t2, m.logits_features(t2, x2, b2), labels))
                        .item();
                m.params().at(pname) = saved;
                return out;
            };
            CHECK(gvf::testing::fd_max_rel_error(f, saved, analytic) < 1e-5);
        }
    }
    SUBCASE("conv3d cross-entropy") {
        Classifier m(conv_spec(), 11);
        Tensor video = rng.uniform_tensor({1, 8, 8, 8}, 0.0, 1.0);
        std::vector<int> labels = {1};
        const std::string pname = "block1_k";
        ad::Tape tape;
        auto bound = m.bind_params(tape, true);
        ad::Var xv = tape.leaf(video, false, "x");
        ad::Var loss = ad::cross_entropy(tape, m.logits_video(tape, xv, bound), labels);
        tape.backward(loss);
        Tensor analytic = tape.grad(bound.at(pname));
        Tensor saved = m.params().at(pname);
        auto f = [&](const Tensor& pv) {
            m.params().at(pname) = pv;
            ad::Tape t2;
            auto b2 = m.bind_params(t2, false);
            ad::Var x2 = t2.leaf(video, false, "x");
            double out =
                t2.value(ad::cross_entropy(t2, m.logits_video(t2, x2, b2), labels)).item();
            m.params().at(pname) = saved;
            return out;
        };
        CHECK(gvf::testing::fd_max_rel_error(f, saved, analytic) < 1e-5);
    }
}

TEST_CASE("train_classifier") {
    SUBCASE("8-sample overfit reaches 100% training accuracy") {
        std::vector<Tensor> xs;
        std::vector<int> ys;
        toy_feature_data(4, 6, 3, xs, ys);
        Classifier m(mlp_spec(), 7);
        ClassifierTrainConfig tc;
        tc.epochs = 200;  // batch 16 holds all 8 samples: one step per epoch
        tc.learning_rate = 1e-2;
        tc.warmup_steps = 10;
        auto losses = train_classifier(m, xs, ys, tc, 5);
        CHECK(losses.size() == 200);
        CHECK(losses.back() < losses.front());
        EvalReport r = evaluate(m, xs, ys);
        CHECK(r.accuracy == 1.0);
    }
    SUBCASE("zero epochs leaves the model unchanged") {
        std::vector<Tensor> xs;
        std::vector<int> ys;
        toy_feature_data(2, 6, 3, xs, ys);
        Classifier m(mlp_spec(), 7);
        Classifier before(mlp_spec(), 7);
        ClassifierTrainConfig tc;
        tc.epochs = 0;
        auto losses = train_classifier(m, xs, ys, tc, 5);
        CHECK(losses.empty());
        for (const auto& name : m.params().names())
            CHECK(m.params().at(name).vec() == before.params().at(name).vec());
    }
    SUBCASE("doubled inputs keep the class-count contract") {
        std::vector<Tensor> xs;
        std::vector<int> ys;
        toy_feature_data(2, 6, 3, xs, ys);
        Classifier m(mlp_spec(), 7);
        Tensor doubled = xs[0];
        for (std::size_t i = 0; i < doubled.size(); ++i) doubled[i] *= 2.0;
        CHECK(m.logits_plain(doubled).size() == 2);
        CHECK(m.logits_plain(xs[0]) != m.logits_plain(doubled));
    }
    SUBCASE("label out of range rejected") {
        std::vector<Tensor> xs = {Tensor({6}, 0.1)};
        std::vector<int> ys = {2};
        Classifier m(mlp_spec(), 7);
        CHECK_THROWS_AS(train_classifier(m, xs, ys, {}, 1), std::invalid_argument);
    }
    SUBCASE("determinism: same seed gives identical checkpoints") {
        std::vector<Tensor> xs;
        std::vector<int> ys;
        toy_feature_data(8, 6, 3, xs, ys);
        ClassifierTrainConfig tc;
        tc.epochs = 5;
        auto run = [&] {
            Classifier m(mlp_spec(), 7);
            train_classifier(m, xs, ys, tc, 5);
            return m;
        };
        Classifier a = run(), b = run();
        for (const auto& name : a.params().names())
            CHECK(a.params().at(name).vec() == b.params().at(name).vec());
    }
}

TEST_CASE("detect and trace") {
    // zeroed head makes logits exactly (0, 0, ...)
    auto zero_logit_model = [](std::size_t classes) {
        Classifier m(mlp_spec(6, classes), 9);
        for (auto& v : m.params().at("head_w").vec()) v = 0.0;
        for (auto& v : m.params().at("head_b").vec()) v = 0.0;
        return m;
    };
    Rng rng(4);
    Tensor x = rng.gaussian_tensor({6});

    SUBCASE("tied logits break toward real with score 0.5") {
        Classifier m = zero_logit_model(2);
        Detection d = detect(m, x);
        CHECK(d.score == doctest::Approx(0.5));
        CHECK(d.label == "real");
    }
    SUBCASE("dominant fake logit gives score > 0.999") {
        Classifier m = zero_logit_model(2);
        m.params().at("head_b")[1] = 10.0;
        Detection d = detect(m, x);
        CHECK(d.score > 0.999);
        CHECK(d.label == "fake");
    }
    SUBCASE("detect on a multi-class model is rejected") {
        Classifier m = zero_logit_model(4);
        CHECK_THROWS_AS(detect(m, x), std::invalid_argument);
    }
    SUBCASE("uniform logits trace to uniform probabilities") {
        Classifier m = zero_logit_model(4);
        auto p = trace_probabilities(m, x);
        for (double v : p) CHECK(v == doctest::Approx(0.25));
    }
    SUBCASE("trace probabilities sum to 1 on random inputs") {
        Classifier m(mlp_spec(6, 4), 9);
        for (int i = 0; i < 5; ++i) {
            auto p = trace_probabilities(m, rng.gaussian_tensor({6}));
            double s = 0.0;
            for (double v : p) s += v;
            CHECK(std::fabs(s - 1.0) < 1e-9);
        }
    }
    SUBCASE("tracing a real-labeled sample fails") {
        Classifier m(mlp_spec(6, 4), 9);
        CHECK_THROWS_AS(trace_sample(m, x, "real"), std::invalid_argument);
        CHECK_NOTHROW(trace_sample(m, x, "fake"));
    }
    SUBCASE("softmax translation invariance") {
        std::vector<double> logits = {0.3, -1.2, 2.5};
        auto a = ad::softmax(logits);
        for (auto& v : logits) v += 17.0;
        auto b = ad::softmax(logits);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-12);
    }
}

TEST_CASE("evaluate and report_from_confusion") {
    SUBCASE("hand-built confusion matrix") {
        // rows true, cols predicted; real=0, fake=1: TN=5 FP=1 / FN=1 TP=3
        EvalReport r = report_from_confusion({{5, 1}, {1, 3}});
        CHECK(r.accuracy == doctest::Approx(0.8));
        CHECK(r.fpr == doctest::Approx(1.0 / 6.0));
        CHECK(r.fnr == doctest::Approx(0.25));
        CHECK(r.count == 10);
    }
    SUBCASE("all fake predicted real gives FNR 1") {
        EvalReport r = report_from_confusion({{4, 0}, {4, 0}});
        CHECK(r.fnr == doctest::Approx(1.0));
        CHECK(r.fpr == doctest::Approx(0.0));
        CHECK(r.accuracy == doctest::Approx(0.5));
    }
    SUBCASE("evaluate cross-checks against its own confusion matrix") {
        std::vector<Tensor> xs;
        std::vector<int> ys;
        toy_feature_data(6, 6, 8, xs, ys);
        Classifier m(mlp_spec(), 7);
        EvalReport r = evaluate(m, xs, ys);
        EvalReport again = report_from_confusion(r.confusion);
        CHECK(r.accuracy == again.accuracy);
        CHECK(r.fpr == again.fpr);
        CHECK(r.fnr == again.fnr);
        CHECK(r.count == xs.size());
    }
}

TEST_CASE("make_splits") {
    auto es = toy_manifest(10);

    SUBCASE("targeted: shared family/generator, disjoint samples, balanced") {
        SplitSpec sp = make_splits(Scenario::Targeted, es, "", 3);
        std::set<std::size_t> train(sp.train_indices.begin(), sp.train_indices.end());
        for (std::size_t i : sp.test_indices) CHECK(train.count(i) == 0);
        CHECK(sp.train_families == sp.test_families);
        CHECK(sp.train_generators == sp.test_generators);
        std::size_t re = 0, fa = 0;
        for (std::size_t i : sp.train_indices) (es[i].is_fake() ? fa : re)++;
        CHECK(re == fa);
    }
    SUBCASE("d-blind: families differ, generators equal") {
        SplitSpec sp = make_splits(Scenario::DBlind, es, "", 3);
        CHECK(sp.train_families == std::vector<std::string>{"smooth"});
        CHECK(sp.test_families == std::vector<std::string>{"textured"});
        CHECK(sp.train_generators == sp.test_generators);
    }
    SUBCASE("m-blind: families equal, generators disjoint") {
        SplitSpec sp = make_splits(Scenario::MBlind, es, "g2", 3);
        CHECK(sp.train_families == sp.test_families);
        for (const auto& g : sp.test_generators)
            CHECK(std::find(sp.train_generators.begin(), sp.train_generators.end(), g) ==
                  sp.train_generators.end());
        CHECK(sp.test_generators == std::vector<std::string>{"g2"});
    }
    SUBCASE("open: both differ; leave-out only in test") {
        SplitSpec sp = make_splits(Scenario::Open, es, "g3", 3);
        CHECK(sp.train_families != sp.test_families);
        CHECK(std::find(sp.train_generators.begin(), sp.train_generators.end(), "g3") ==
              sp.train_generators.end());
        CHECK(sp.test_generators == std::vector<std::string>{"g3"});
    }
    SUBCASE("missing leave-out generator rejected") {
        CHECK_THROWS_AS(make_splits(Scenario::Open, es, "g9", 3), std::invalid_argument);
    }
    SUBCASE("single-family manifest cannot support d-blind") {
        std::vector<ManifestEntry> one;
        for (const auto& e : es)
            if (e.family == "smooth") one.push_back(e);
        CHECK_THROWS_AS(make_splits(Scenario::DBlind, one, "", 3), std::invalid_argument);
    }
    SUBCASE("tracing splits are fake-only") {
        for (Scenario sc : {Scenario::TraceDataAware, Scenario::TraceDataAgnostic}) {
            SplitSpec sp = make_splits(sc, es, "", 3);
            for (std::size_t i : sp.train_indices) CHECK(es[i].is_fake());
            for (std::size_t i : sp.test_indices) CHECK(es[i].is_fake());
        }
    }
    SUBCASE("trace-data-agnostic: query family unseen in training") {
        SplitSpec sp = make_splits(Scenario::TraceDataAgnostic, es, "", 3);
        CHECK(sp.train_families == std::vector<std::string>{"smooth"});
        CHECK(sp.test_families == std::vector<std::string>{"textured"});
    }
    SUBCASE("pure function of its arguments") {
        SplitSpec a = make_splits(Scenario::Targeted, es, "", 3);
        SplitSpec b = make_splits(Scenario::Targeted, es, "", 3);
        CHECK(a.train_indices == b.train_indices);
        CHECK(a.test_indices == b.test_indices);
        CHECK(a.fingerprint(es) == b.fingerprint(es));
        SplitSpec c = make_splits(Scenario::Targeted, es, "", 4);
        CHECK(a.fingerprint(es) != c.fingerprint(es));
    }
    SUBCASE("property: invariants over random manifest sizes") {
        Rng rng(17);
        for (int trial = 0; trial < 5; ++trial) {
            auto m = toy_manifest(4 + rng.uniform_int(8));
            for (Scenario sc : {Scenario::Targeted, Scenario::DBlind, Scenario::MBlind,
                                Scenario::Open}) {
                SplitSpec sp = make_splits(sc, m, "g1", rng.next_u64());
                std::set<std::size_t> train(sp.train_indices.begin(), sp.train_indices.end());
                for (std::size_t i : sp.test_indices) CHECK(train.count(i) == 0);
                std::size_t re = 0, fa = 0;
                for (std::size_t i : sp.train_indices) (m[i].is_fake() ? fa : re)++;
                CHECK(re == fa);
                CHECK(!sp.test_indices.empty());
            }
        }
    }
}

TEST_CASE("classifier checkpoint round-trip") {
    Classifier m(conv_spec(3), 21);
    auto dir = std::filesystem::temp_directory_path() / "gvf_cls_ckpt";
    std::filesystem::create_directories(dir);
    m.save(dir / "m.ckpt", dir / "m.json");
    Classifier loaded = Classifier::load(dir / "m.ckpt", dir / "m.json");
    CHECK(loaded.spec().kind == BackboneKind::Conv3d);
    CHECK(loaded.spec().classes == 3);
    Rng rng(2);
    Tensor video = rng.uniform_tensor({8, 1, 8, 8}, 0.0, 1.0);
    CHECK(m.logits_plain(video) == loaded.logits_plain(video));
    std::filesystem::remove_all(dir);
}

namespace {

// Class-1 evidence is a bright static square; class 0 is noise.
Tensor cam_sample(Rng& rng, int label) {
    Tensor v = rng.uniform_tensor({8, 1, 8, 8}, 0.0, 0.3);
    if (label == 1)
        for (std::size_t t = 0; t < 8; ++t)
            for (std::size_t h = 1; h < 4; ++h)
                for (std::size_t w = 1; w < 4; ++w) v.at4(t, 0, h, w) = 1.0;
    return v;
}

double class_logit(const Classifier& m, const Tensor& video, std::size_t cls) {
    return m.logits_plain(video)[cls];
}

}  // namespace

TEST_CASE("grad_cam") {
    Classifier m(conv_spec(), 31);
    Rng rng(6);

    SUBCASE("feature-mlp backbone rejected") {
        Classifier mlp(mlp_spec(), 1);
        VideoTensor v(8, 1, 8, 8);
        CHECK_THROWS_AS(grad_cam(mlp, v, 0), std::invalid_argument);
    }
    SUBCASE("heatmap in [0,1] with max exactly 1") {
        VideoTensor v(Tensor({8, 1, 8, 8}, rng.uniform_tensor({8 * 64}, 0.0, 1.0).vec()));
        VideoTensor cam = grad_cam(m, v, 1);
        double hi = 0.0;
        for (std::size_t i = 0; i < cam.data.size(); ++i) {
            CHECK(cam.data[i] >= 0.0);
            CHECK(cam.data[i] <= 1.0);
            hi = std::max(hi, cam.data[i]);
        }
        CHECK(hi == doctest::Approx(1.0));
        CHECK(cam.data.shape() == v.data.shape());
    }
    SUBCASE("zero-gradient target class gives an all-zero heatmap") {
        Classifier z(conv_spec(), 31);
        Tensor& hw = z.params().at("head_w");
        for (std::size_t i = 0; i < hw.extent(1); ++i) hw.at2(1, i) = 0.0;
        z.params().at("head_b")[1] = 0.0;
        VideoTensor v(Tensor({8, 1, 8, 8}, rng.uniform_tensor({8 * 64}, 0.0, 1.0).vec()));
        VideoTensor cam = grad_cam(z, v, 1);
        for (std::size_t i = 0; i < cam.data.size(); ++i) CHECK(cam.data[i] == 0.0);
    }
    SUBCASE("occlusion consistency over 20 samples") {
        // train a small discriminative model first
        std::vector<Tensor> xs;
        std::vector<int> ys;
        Rng drng(41);
        for (int i = 0; i < 24; ++i) {
            int label = i % 2;
            xs.push_back(cam_sample(drng, label));
            ys.push_back(label);
        }
        Classifier trained(conv_spec(), 51);
        ClassifierTrainConfig tc;
        tc.epochs = 6;
        tc.learning_rate = 5e-3;
        tc.warmup_steps = 20;
        train_classifier(trained, xs, ys, tc, 9);

        Rng orng(77);
        int cam_wins = 0;
        const std::size_t area = 8 * 64 / 10;  // top decile
        for (int s = 0; s < 20; ++s) {
            Tensor v = cam_sample(orng, 1);
            VideoTensor cam = grad_cam(trained, VideoTensor(v), 1);
            double base = class_logit(trained, v, 1);

            std::vector<std::size_t> idx(v.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return cam.data[a] > cam.data[b];
            });
            Tensor masked_top = v;
            for (std::size_t i = 0; i < area; ++i) masked_top[idx[i]] = 0.0;

            orng.shuffle(idx.begin(), idx.end());
            Tensor masked_rand = v;
            for (std::size_t i = 0; i < area; ++i) masked_rand[idx[i]] = 0.0;

            double drop_top = base - class_logit(trained, masked_top, 1);
            double drop_rand = base - class_logit(trained, masked_rand, 1);
            if (drop_top > drop_rand) ++cam_wins;
        }
        CHECK(cam_wins > 10);
    }
}
