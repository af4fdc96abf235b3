#include <doctest.h>

#include <cmath>
#include <fstream>

#include "gvf/adam.hpp"
#include "gvf/checkpoint.hpp"
#include "gvf/ops.hpp"
#include "gvf/rng.hpp"
#include "test_helpers.hpp"

using namespace gvf;
using ad::Tape;
using ad::Var;

namespace {

// Shared gradient-check harness: builds the loss twice, once taped for the
// analytic gradient and once per finite-difference probe.
double gradcheck(const std::function<Var(Tape&, Var)>& build, const Tensor& x0,
                 double step = 1e-5) {
    Tape tape;
    Var x = tape.leaf(x0, true, "x");
    Var loss = build(tape, x);
    tape.backward(loss);
    Tensor analytic = tape.grad(x);
    auto f = [&](const Tensor& xv) {
        Tape t2;
        Var v = t2.leaf(xv, false, "x");
        return t2.value(build(t2, v)).item();
    };
    return testing::fd_max_rel_error(f, x0, analytic, step);
}

}  // namespace

TEST_CASE("relu forward definition") {
    Tape tape;
    Var x = tape.leaf(Tensor({3}, {-1.0, 0.0, 2.5}), false, "x");
    Var y = ad::relu(tape, x);
    CHECK(tape.value(y)[0] == 0.0);
    CHECK(tape.value(y)[1] == 0.0);
    CHECK(tape.value(y)[2] == 2.5);
}

TEST_CASE("affine identity maps input to itself") {
    Tape tape;
    Tensor w({3, 3});
    for (int i = 0; i < 3; ++i) w.at2(i, i) = 1.0;
    Var x = tape.leaf(Tensor({3}, {0.3, -0.7, 1.2}), false, "x");
    Var wv = tape.leaf(w, false, "w");
    Var bv = tape.leaf(Tensor({3}), false, "b");
    Var y = ad::affine(tape, x, wv, bv);
    for (int i = 0; i < 3; ++i) CHECK(tape.value(y)[i] == doctest::Approx(tape.value(x)[i]));
}

TEST_CASE("conv2d of constant image scales by kernel sum on interior") {
    // direct-summation oracle: constant c convolved with kernel summing to s
    // gives c*s wherever the window lies fully inside.
    const double c = 0.4;
    Rng rng(7);
    Tensor k = rng.uniform_tensor({1, 1, 3, 3}, -1.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i];
    Tape tape;
    Var x = tape.leaf(Tensor({1, 1, 6, 6}, c), false, "x");
    Var kv = tape.leaf(k, false, "k");
    Var bv = tape.leaf(Tensor({1}), false, "b");
    Var y = ad::conv2d(tape, x, kv, bv);
    for (std::size_t h = 1; h < 5; ++h)
        for (std::size_t w = 1; w < 5; ++w)
            CHECK(tape.value(y).at4(0, 0, h, w) == doctest::Approx(c * s).epsilon(1e-12));
}

TEST_CASE("shape mismatch failures name the operation") {
    Tape tape;
    Var a = tape.leaf(Tensor({3}), false, "a");
    Var b = tape.leaf(Tensor({4}), false, "b");
    CHECK_THROWS_WITH_AS(ad::add(tape, a, b), doctest::Contains("add"),
                         std::invalid_argument);
}

TEST_CASE("backward requires scalar output") {
    Tape tape;
    Var x = tape.leaf(Tensor({2}, {1.0, 2.0}), true, "x");
    Var y = ad::scale(tape, x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("gradient of half squared norm is x") {
    Tape tape;
    Tensor x0({4}, {0.5, -1.5, 2.0, 0.25});
    Var x = tape.leaf(x0, true, "x");
    Var d = ad::mul(tape, x, x);
    Var loss = ad::scale(tape, ad::sum(tape, d), 0.5);
    tape.backward(loss);
    for (std::size_t i = 0; i < x0.size(); ++i)
        CHECK(tape.grad(x)[i] == doctest::Approx(x0[i]).epsilon(1e-12));
}

TEST_CASE("loss independent of a parameter yields zero gradient") {
    Tape tape;
    Var used = tape.leaf(Tensor({2}, {1.0, 2.0}), true, "used");
    Var unused = tape.leaf(Tensor({2}, {3.0, 4.0}), true, "unused");
    Var loss = ad::sum(tape, ad::mul(tape, used, used));
    tape.backward(loss);
    CHECK(tape.grad(unused)[0] == 0.0);
    CHECK(tape.grad(unused)[1] == 0.0);
    (void)unused;
}

TEST_CASE("two-layer network gradient vs central finite differences") {
    Rng rng(42);
    Tensor w1 = rng.uniform_tensor({5, 4}, -0.8, 0.8);
    Tensor b1 = rng.uniform_tensor({5}, -0.3, 0.3);
    Tensor w2 = rng.uniform_tensor({1, 5}, -0.8, 0.8);
    Tensor b2 = rng.uniform_tensor({1}, -0.3, 0.3);
    Tensor x0 = rng.uniform_tensor({4}, -1.0, 1.0);

    auto build = [&](Tape& t, Var x) {
        Var wv1 = t.leaf(w1, false, "w1");
        Var bv1 = t.leaf(b1, false, "b1");
        Var wv2 = t.leaf(w2, false, "w2");
        Var bv2 = t.leaf(b2, false, "b2");
        Var h = ad::tanh_op(t, ad::affine(t, x, wv1, bv1));
        Var o = ad::affine(t, h, wv2, bv2);
        return ad::sum(t, ad::mul(t, o, o));
    };
    CHECK(gradcheck(build, x0) < 1e-5);
}

TEST_CASE("per-operator gradient checks on random small tensors") {
    Rng rng(123);

    SUBCASE("conv2d w.r.t. input") {
        Tensor k = rng.uniform_tensor({2, 1, 3, 3}, -0.5, 0.5);
        Tensor x0 = rng.uniform_tensor({1, 1, 5, 5}, -1.0, 1.0);
        CHECK(gradcheck(
                  [&](Tape& t, Var x) {
                      Var kv = t.leaf(k, false, "k");
                      Var bv = t.leaf(Tensor({2}, 0.1), false, "b");
                      Var y = ad::conv2d(t, x, kv, bv);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
    }
    SUBCASE("conv2d w.r.t. kernel") {
        Tensor x = rng.uniform_tensor({2, 2, 4, 4}, -1.0, 1.0);
        Tensor k0 = rng.uniform_tensor({3, 2, 3, 3}, -0.5, 0.5);
        Tape tape;
        Var kv = tape.leaf(k0, true, "k");
        Var xv = tape.leaf(x, false, "x");
        Var bv = tape.leaf(Tensor({3}), false, "b");
        Var y = ad::conv2d(tape, xv, kv, bv);
        Var loss = ad::sum(tape, ad::mul(tape, y, y));
        tape.backward(loss);
        auto f = [&](const Tensor& kt) {
            Tape t2;
            Var kk = t2.leaf(kt, false, "k");
            Var xx = t2.leaf(x, false, "x");
            Var bb = t2.leaf(Tensor({3}), false, "b");
            Var yy = ad::conv2d(t2, xx, kk, bb);
            return t2.value(ad::sum(t2, ad::mul(t2, yy, yy))).item();
        };
        CHECK(testing::fd_max_rel_error(f, k0, tape.grad(kv)) < 1e-5);
    }
    SUBCASE("conv3d") {
        Tensor k = rng.uniform_tensor({2, 1, 3, 3, 3}, -0.4, 0.4);
        Tensor x0 = rng.uniform_tensor({1, 4, 4, 4}, -1.0, 1.0);
        CHECK(gradcheck(
                  [&](Tape& t, Var x) {
                      Var kv = t.leaf(k, false, "k");
                      Var bv = t.leaf(Tensor({2}, 0.05), false, "b");
                      Var y = ad::conv3d(t, x, kv, bv);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
    }
    SUBCASE("avgpool2d / avgpool3d / channel_mean3d") {
        Tensor x0 = rng.uniform_tensor({2, 2, 4, 4}, -1.0, 1.0);
        CHECK(gradcheck(
                  [&](Tape& t, Var x) {
                      Var y = ad::avgpool2d(t, x);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
        CHECK(gradcheck(
                  [&](Tape& t, Var x) {
                      Var y = ad::avgpool3d(t, x);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
        CHECK(gradcheck(
                  [&](Tape& t, Var x) {
                      Var y = ad::channel_mean3d(t, x);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
    }
    SUBCASE("temporal_mix and concat_channels") {
        Tensor w = rng.uniform_tensor({3}, -0.5, 0.9);
        Tensor x0 = rng.uniform_tensor({4, 1, 3, 3}, -1.0, 1.0);
        CHECK(gradcheck(
                  [&](Tape& t, Var x) {
                      Var wv = t.leaf(w, false, "w");
                      Var y = ad::temporal_mix(t, x, wv);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
        Tensor other = rng.uniform_tensor({4, 2, 3, 3}, -1.0, 1.0);
        CHECK(gradcheck(
                  [&](Tape& t, Var x) {
                      Var ov = t.leaf(other, false, "o");
                      Var y = ad::concat_channels(t, x, ov);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
    }
    SUBCASE("l1/l2 norms away from kinks") {
        Tensor x0({5}, {0.7, -1.3, 0.4, -0.9, 1.8});
        CHECK(gradcheck([](Tape& t, Var x) { return ad::l1_norm(t, x); }, x0) < 1e-5);
        CHECK(gradcheck([](Tape& t, Var x) { return ad::l2_norm(t, x); }, x0) < 1e-5);
    }
    SUBCASE("relu away from kinks") {
        Tensor x0({4}, {0.5, -0.8, 1.2, -0.1});
        CHECK(gradcheck(
                  [](Tape& t, Var x) {
                      Var y = ad::relu(t, x);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
    }
    SUBCASE("cross_entropy") {
        Tensor x0 = rng.uniform_tensor({3, 4}, -1.5, 1.5);
        std::vector<int> labels{2, 0, 3};
        CHECK(gradcheck([&](Tape& t, Var x) { return ad::cross_entropy(t, x, labels); },
                        x0) < 1e-5);
    }
    SUBCASE("reshape and select") {
        Tensor x0 = rng.uniform_tensor({2, 3}, -1.0, 1.0);
        CHECK(gradcheck(
                  [](Tape& t, Var x) {
                      Var y = ad::reshape(t, x, {3, 2});
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
        CHECK(gradcheck(
                  [](Tape& t, Var x) {
                      Var y = ad::select(t, x, 4);
                      return ad::mul(t, y, y);
                  },
                  x0) < 1e-5);
    }
    SUBCASE("reciprocal away from zero") {
        Tensor x0({4}, {0.8, -1.4, 2.1, 0.6});
        CHECK(gradcheck(
                  [](Tape& t, Var x) {
                      Var y = ad::reciprocal(t, x);
                      return ad::sum(t, ad::mul(t, y, y));
                  },
                  x0) < 1e-5);
    }
}

TEST_CASE("l1 subgradient at zero is zero") {
    Tape tape;
    Var x = tape.leaf(Tensor({3}, {0.0, 0.0, 0.0}), true, "x");
    Var loss = ad::l1_norm(tape, x);
    tape.backward(loss);
    for (int i = 0; i < 3; ++i) CHECK(tape.grad(x)[i] == 0.0);
}

TEST_CASE("backward is linear in the seed") {
    Rng rng(9);
    Tensor x0 = rng.uniform_tensor({6}, -1.0, 1.0);
    auto grad_with_seed = [&](double seed) {
        Tape tape;
        Var x = tape.leaf(x0, true, "x");
        Var loss = ad::sum(tape, ad::mul(tape, x, x));
        tape.backward(loss, seed);
        return tape.grad(x);
    };
    Tensor g1 = grad_with_seed(1.0);
    Tensor g3 = grad_with_seed(3.0);
    for (std::size_t i = 0; i < g1.size(); ++i)
        CHECK(g3[i] == doctest::Approx(3.0 * g1[i]).epsilon(1e-12));
}

TEST_CASE("linearity across two scalar losses on a shared graph") {
    Rng rng(11);
    Tensor x0 = rng.uniform_tensor({5}, -1.0, 1.0);
    const double a = 2.0, b = -0.5;

    auto grads = [&](bool combined) {
        Tape tape;
        Var x = tape.leaf(x0, true, "x");
        Var l1 = ad::sum(tape, ad::mul(tape, x, x));
        Var l2 = ad::l1_norm(tape, x);
        if (combined) {
            Var total = ad::add(tape, ad::scale(tape, l1, a), ad::scale(tape, l2, b));
            tape.backward(total);
            return tape.grad(x);
        }
        tape.backward(l1);
        Tensor g1 = tape.grad(x);
        tape.backward(l2);
        Tensor g2 = tape.grad(x);
        Tensor out(g1.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * g1[i] + b * g2[i];
        return out;
    };
    Tensor combined = grads(true);
    Tensor separate = grads(false);
    for (std::size_t i = 0; i < combined.size(); ++i)
        CHECK(combined[i] == doctest::Approx(separate[i]).epsilon(1e-12));
}

TEST_CASE("forward determinism: identical inputs give bit-identical values") {
    auto run = [] {
        Rng rng(77);
        Tensor x = rng.uniform_tensor({1, 1, 8, 8}, 0.0, 1.0);
        Tensor k = rng.uniform_tensor({4, 1, 3, 3}, -0.5, 0.5);
        Tape tape;
        Var xv = tape.leaf(x, false, "x");
        Var kv = tape.leaf(k, false, "k");
        Var bv = tape.leaf(Tensor({4}, 0.01), false, "b");
        Var y = ad::tanh_op(tape, ad::conv2d(tape, xv, kv, bv));
        Var loss = ad::sum(tape, ad::mul(tape, y, y));
        return tape.value(loss).item();
    };
    CHECK(run() == run());
}

TEST_CASE("adam: zero gradient leaves parameters unchanged, increments step") {
    Adam opt({1e-2, 0.9, 0.999, 1e-8, 0});
    Tensor p({3}, {1.0, -2.0, 0.5});
    Tensor g({3});
    Tensor before = p;
    opt.step({&p}, {&g});
    CHECK(opt.step_count() == 1);
    for (int i = 0; i < 3; ++i) CHECK(p[i] == before[i]);
}

TEST_CASE("adam: first post-warmup step moves by ~lr*sign(grad)") {
    // closed-form: bias correction makes mhat/sqrt(vhat) = sign(g) at step 1
    const double lr = 1e-3;
    Adam opt({lr, 0.9, 0.999, 1e-8, 0});
    Tensor p({2}, {0.0, 0.0});
    Tensor g({2}, {0.3, -4.0});
    opt.step({&p}, {&g});
    CHECK(p[0] == doctest::Approx(-lr).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(lr).epsilon(1e-6));
}

TEST_CASE("adam: linear warmup ramp hits half rate at half warmup") {
    Adam opt({1e-4, 0.9, 0.999, 1e-8, 1000});
    CHECK(opt.effective_rate(500) == doctest::Approx(0.5e-4).epsilon(1e-12));
    CHECK(opt.effective_rate(1000) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(opt.effective_rate(5000) == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("adam: NaN gradient halts training") {
    Adam opt;
    Tensor p({2}, {1.0, 1.0});
    Tensor g({2}, {0.1, std::nan("")});
    CHECK_THROWS_AS(opt.step({&p}, {&g}), std::runtime_error);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    Rng rng(5);
    ParamStore store;
    store.add("alpha", rng.uniform_tensor({3, 4}, -10.0, 10.0));
    store.add("beta/bias", rng.gaussian_tensor({7}));
    store.add("gamma", Tensor::scalar(0.1 + 0.2));  // non-representable decimal
    auto path = std::filesystem::temp_directory_path() / "gvf_ckpt_test.bin";
    store.save(path);
    ParamStore loaded = ParamStore::load(path);
    CHECK(loaded.size() == store.size());
    for (const auto& name : store.names()) {
        const Tensor& a = store.at(name);
        const Tensor& b = loaded.at(name);
        REQUIRE(a.shape() == b.shape());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects corrupted payload") {
    ParamStore store;
    store.add("w", Tensor({2}, {1.0, 2.0}));
    auto path = std::filesystem::temp_directory_path() / "gvf_ckpt_corrupt.bin";
    store.save(path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(20);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(ParamStore::load(path), std::runtime_error);
    std::filesystem::remove(path);
}
