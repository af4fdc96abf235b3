#include "gvf/ops.hpp"

namespace gvf::ad {

using detail::require;
using detail::require_same_shape;

Var add(Tape& t, Var a, Var b) {
    require_same_shape(t, "add", a, b);
    Tensor out(t.value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.value(a)[i] + t.value(b)[i];
    return t.op(std::move(out), {a, b},
                [a, b](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i) {
                        tp.accumulate(a, i, n.grad[i]);
                        tp.accumulate(b, i, n.grad[i]);
                    }
                },
                "add");
}

Var sub(Tape& t, Var a, Var b) {
    require_same_shape(t, "sub", a, b);
    Tensor out(t.value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.value(a)[i] - t.value(b)[i];
    return t.op(std::move(out), {a, b},
                [a, b](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i) {
                        tp.accumulate(a, i, n.grad[i]);
                        tp.accumulate(b, i, -n.grad[i]);
                    }
                },
                "sub");
}

Var mul(Tape& t, Var a, Var b) {
    require_same_shape(t, "mul", a, b);
    Tensor out(t.value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.value(a)[i] * t.value(b)[i];
    return t.op(std::move(out), {a, b},
                [a, b](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i) {
                        tp.accumulate(a, i, n.grad[i] * tp.value(b)[i]);
                        tp.accumulate(b, i, n.grad[i] * tp.value(a)[i]);
                    }
                },
                "mul");
}

Var scale(Tape& t, Var a, double c) {
    Tensor out(t.value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * t.value(a)[i];
    return t.op(std::move(out), {a},
                [a, c](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i)
                        tp.accumulate(a, i, c * n.grad[i]);
                },
                "scale");
}

Var relu(Tape& t, Var a) {
    Tensor out(t.value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, t.value(a)[i]);
    return t.op(std::move(out), {a},
                [a](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i)
                        if (tp.value(a)[i] > 0.0) tp.accumulate(a, i, n.grad[i]);
                },
                "relu");
}

Var tanh_op(Tape& t, Var a) {
    Tensor out(t.value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(t.value(a)[i]);
    return t.op(std::move(out), {a},
                [a](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i) {
                        double y = n.value[i];
                        tp.accumulate(a, i, n.grad[i] * (1.0 - y * y));
                    }
                },
                "tanh");
}

Var reciprocal(Tape& t, Var a) {
    Tensor out(t.value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / t.value(a)[i];
    return t.op(std::move(out), {a},
                [a](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i) {
                        double y = n.value[i];
                        tp.accumulate(a, i, -n.grad[i] * y * y);
                    }
                },
                "reciprocal");
}

Var affine(Tape& t, Var x, Var w, Var b) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    const Tensor& bv = t.value(b);
    require(wv.rank() == 2, "affine", "weight must be rank 2");
    const std::size_t O = wv.extent(0), I = wv.extent(1);
    require(bv.size() == O, "affine", "bias length mismatch");
    const bool batched = xv.rank() == 2;
    const std::size_t B = batched ? xv.extent(0) : 1;
    const std::size_t xi = batched ? xv.extent(1) : xv.size();
    require(xi == I, "affine",
            "input width " + std::to_string(xi) + " vs weight " + std::to_string(I));

    Tensor out(batched ? std::vector<std::size_t>{B, O} : std::vector<std::size_t>{O});
    for (std::size_t r = 0; r < B; ++r)
        for (std::size_t o = 0; o < O; ++o) {
            double acc = bv[o];
            const double* xr = xv.data() + r * I;
            const double* wr = wv.data() + o * I;
            for (std::size_t i = 0; i < I; ++i) acc += xr[i] * wr[i];
            out[r * O + o] = acc;
        }
    return t.op(std::move(out), {x, w, b},
                [x, w, b, B, I, O](Tape& tp, Tape::Node& n) {
                    const Tensor& xv = tp.value(x);
                    const Tensor& wv = tp.value(w);
                    for (std::size_t r = 0; r < B; ++r)
                        for (std::size_t o = 0; o < O; ++o) {
                            double g = n.grad[r * O + o];
                            if (g == 0.0) continue;
                            tp.accumulate(b, o, g);
                            for (std::size_t i = 0; i < I; ++i) {
                                tp.accumulate(w, o * I + i, g * xv[r * I + i]);
                                tp.accumulate(x, r * I + i, g * wv[o * I + i]);
                            }
                        }
                },
                "affine");
}

Var conv2d(Tape& t, Var x, Var k, Var bias) {
    const Tensor& xv = t.value(x);
    const Tensor& kv = t.value(k);
    require(xv.rank() == 4, "conv2d", "input must be [B,C,H,W], got " + xv.shape_str());
    require(kv.rank() == 4, "conv2d", "kernel must be [OC,IC,KH,KW]");
    const std::size_t B = xv.extent(0), C = xv.extent(1), H = xv.extent(2), W = xv.extent(3);
    const std::size_t OC = kv.extent(0), IC = kv.extent(1), KH = kv.extent(2), KW = kv.extent(3);
    require(IC == C, "conv2d", "channel mismatch");
    require(KH % 2 == 1 && KW % 2 == 1, "conv2d", "kernel extents must be odd");
    require(t.value(bias).size() == OC, "conv2d", "bias length mismatch");
    const long ph = static_cast<long>(KH / 2), pw = static_cast<long>(KW / 2);

    Tensor out({B, OC, H, W});
    const double* bp = t.value(bias).data();
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t oc = 0; oc < OC; ++oc)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w) {
                    double acc = bp[oc];
                    for (std::size_t ic = 0; ic < C; ++ic)
                        for (std::size_t kh = 0; kh < KH; ++kh) {
                            long ih = static_cast<long>(h) + static_cast<long>(kh) - ph;
                            if (ih < 0 || ih >= static_cast<long>(H)) continue;
                            const double* xrow =
                                xv.data() + ((bi * C + ic) * H + ih) * W;
                            const double* krow =
                                kv.data() + ((oc * IC + ic) * KH + kh) * KW;
                            for (std::size_t kw = 0; kw < KW; ++kw) {
                                long iw = static_cast<long>(w) + static_cast<long>(kw) - pw;
                                if (iw < 0 || iw >= static_cast<long>(W)) continue;
                                acc += xrow[iw] * krow[kw];
                            }
                        }
                    out.at4(bi, oc, h, w) = acc;
                }
    return t.op(std::move(out), {x, k, bias},
                [x, k, bias, B, C, H, W, OC, KH, KW, ph, pw](Tape& tp, Tape::Node& n) {
                    const Tensor& xv = tp.value(x);
                    const Tensor& kv = tp.value(k);
                    Tensor& xg = tp.grad_mut(x);
                    Tensor& kg = tp.grad_mut(k);
                    Tensor& bg = tp.grad_mut(bias);
                    for (std::size_t bi = 0; bi < B; ++bi)
                        for (std::size_t oc = 0; oc < OC; ++oc)
                            for (std::size_t h = 0; h < H; ++h)
                                for (std::size_t w = 0; w < W; ++w) {
                                    double g = n.grad.at4(bi, oc, h, w);
                                    if (g == 0.0) continue;
                                    bg[oc] += g;
                                    for (std::size_t ic = 0; ic < C; ++ic)
                                        for (std::size_t kh = 0; kh < KH; ++kh) {
                                            long ih = static_cast<long>(h) +
                                                      static_cast<long>(kh) - ph;
                                            if (ih < 0 || ih >= static_cast<long>(H)) continue;
                                            for (std::size_t kw = 0; kw < KW; ++kw) {
                                                long iw = static_cast<long>(w) +
                                                          static_cast<long>(kw) - pw;
                                                if (iw < 0 || iw >= static_cast<long>(W))
                                                    continue;
                                                std::size_t xi =
                                                    ((bi * C + ic) * H + ih) * W + iw;
                                                std::size_t ki =
                                                    ((oc * C + ic) * KH + kh) * KW + kw;
                                                kg[ki] += g * xv[xi];
                                                xg[xi] += g * kv[ki];
                                            }
                                        }
                                }
                },
                "conv2d");
}

Var conv3d(Tape& t, Var x, Var k, Var bias) {
    const Tensor& xv = t.value(x);
    const Tensor& kv = t.value(k);
    require(xv.rank() == 4, "conv3d", "input must be [C,T,H,W], got " + xv.shape_str());
    require(kv.rank() == 5, "conv3d", "kernel must be [OC,IC,KT,KH,KW]");
    const std::size_t C = xv.extent(0), T = xv.extent(1), H = xv.extent(2), W = xv.extent(3);
    const std::size_t OC = kv.extent(0), IC = kv.extent(1);
    const std::size_t KT = kv.extent(2), KH = kv.extent(3), KW = kv.extent(4);
    require(IC == C, "conv3d", "channel mismatch");
    require(KT % 2 == 1 && KH % 2 == 1 && KW % 2 == 1, "conv3d", "kernel extents must be odd");
    require(t.value(bias).size() == OC, "conv3d", "bias length mismatch");
    const long pt = static_cast<long>(KT / 2), ph = static_cast<long>(KH / 2),
               pw = static_cast<long>(KW / 2);

    auto kidx = [IC, KT, KH, KW](std::size_t oc, std::size_t ic, std::size_t kt,
                                 std::size_t kh, std::size_t kw) {
        return (((oc * IC + ic) * KT + kt) * KH + kh) * KW + kw;
    };
    auto xidx = [T, H, W](std::size_t c, std::size_t tt, std::size_t hh, std::size_t ww) {
        return ((c * T + tt) * H + hh) * W + ww;
    };

    Tensor out({OC, T, H, W});
    const double* bp = t.value(bias).data();
    for (std::size_t oc = 0; oc < OC; ++oc)
        for (std::size_t tt = 0; tt < T; ++tt)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w) {
                    double acc = bp[oc];
                    for (std::size_t ic = 0; ic < C; ++ic)
                        for (std::size_t kt = 0; kt < KT; ++kt) {
                            long it = static_cast<long>(tt) + static_cast<long>(kt) - pt;
                            if (it < 0 || it >= static_cast<long>(T)) continue;
                            for (std::size_t kh = 0; kh < KH; ++kh) {
                                long ih = static_cast<long>(h) + static_cast<long>(kh) - ph;
                                if (ih < 0 || ih >= static_cast<long>(H)) continue;
                                for (std::size_t kw = 0; kw < KW; ++kw) {
                                    long iw =
                                        static_cast<long>(w) + static_cast<long>(kw) - pw;
                                    if (iw < 0 || iw >= static_cast<long>(W)) continue;
                                    acc += xv[xidx(ic, it, ih, iw)] *
                                           kv[kidx(oc, ic, kt, kh, kw)];
                                }
                            }
                        }
                    out.at4(oc, tt, h, w) = acc;
                }
    return t.op(std::move(out), {x, k, bias},
                [=](Tape& tp, Tape::Node& n) {
                    const Tensor& xv = tp.value(x);
                    const Tensor& kv = tp.value(k);
                    Tensor& xg = tp.grad_mut(x);
                    Tensor& kg = tp.grad_mut(k);
                    Tensor& bg = tp.grad_mut(bias);
                    for (std::size_t oc = 0; oc < OC; ++oc)
                        for (std::size_t tt = 0; tt < T; ++tt)
                            for (std::size_t h = 0; h < H; ++h)
                                for (std::size_t w = 0; w < W; ++w) {
                                    double g = n.grad.at4(oc, tt, h, w);
                                    if (g == 0.0) continue;
                                    bg[oc] += g;
                                    for (std::size_t ic = 0; ic < C; ++ic)
                                        for (std::size_t kt = 0; kt < KT; ++kt) {
                                            long it = static_cast<long>(tt) +
                                                      static_cast<long>(kt) - pt;
                                            if (it < 0 || it >= static_cast<long>(T)) continue;
                                            for (std::size_t kh = 0; kh < KH; ++kh) {
                                                long ih = static_cast<long>(h) +
                                                          static_cast<long>(kh) - ph;
                                                if (ih < 0 || ih >= static_cast<long>(H))
                                                    continue;
                                                for (std::size_t kw = 0; kw < KW; ++kw) {
                                                    long iw = static_cast<long>(w) +
                                                              static_cast<long>(kw) - pw;
                                                    if (iw < 0 || iw >= static_cast<long>(W))
                                                        continue;
                                                    std::size_t xi = xidx(ic, it, ih, iw);
                                                    std::size_t ki =
                                                        kidx(oc, ic, kt, kh, kw);
                                                    kg[ki] += g * xv[xi];
                                                    xg[xi] += g * kv[ki];
                                                }
                                            }
                                        }
                                }
                },
                "conv3d");
}

Var avgpool2d(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    require(xv.rank() == 4, "avgpool2d", "input must be [B,C,H,W]");
    const std::size_t B = xv.extent(0), C = xv.extent(1), H = xv.extent(2), W = xv.extent(3);
    require(H % 2 == 0 && W % 2 == 0, "avgpool2d", "spatial extents must be even");
    Tensor out({B, C, H / 2, W / 2});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t h = 0; h + 1 < H; h += 2)
                for (std::size_t w = 0; w + 1 < W; w += 2)
                    out.at4(b, c, h / 2, w / 2) =
                        0.25 * (xv.at4(b, c, h, w) + xv.at4(b, c, h, w + 1) +
                                xv.at4(b, c, h + 1, w) + xv.at4(b, c, h + 1, w + 1));
    return t.op(std::move(out), {x},
                [x, B, C, H, W](Tape& tp, Tape::Node& n) {
                    Tensor& xg = tp.grad_mut(x);
                    for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t c = 0; c < C; ++c)
                            for (std::size_t h = 0; h + 1 < H; h += 2)
                                for (std::size_t w = 0; w + 1 < W; w += 2) {
                                    double g = 0.25 * n.grad.at4(b, c, h / 2, w / 2);
                                    xg.at4(b, c, h, w) += g;
                                    xg.at4(b, c, h, w + 1) += g;
                                    xg.at4(b, c, h + 1, w) += g;
                                    xg.at4(b, c, h + 1, w + 1) += g;
                                }
                },
                "avgpool2d");
}

Var avgpool3d(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    require(xv.rank() == 4, "avgpool3d", "input must be [C,T,H,W]");
    const std::size_t C = xv.extent(0), T = xv.extent(1), H = xv.extent(2), W = xv.extent(3);
    require(T % 2 == 0 && H % 2 == 0 && W % 2 == 0, "avgpool3d", "extents must be even");
    Tensor out({C, T / 2, H / 2, W / 2});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t tt = 0; tt + 1 < T; tt += 2)
            for (std::size_t h = 0; h + 1 < H; h += 2)
                for (std::size_t w = 0; w + 1 < W; w += 2) {
                    double acc = 0.0;
                    for (int dt = 0; dt < 2; ++dt)
                        for (int dh = 0; dh < 2; ++dh)
                            for (int dw = 0; dw < 2; ++dw)
                                acc += xv.at4(c, tt + dt, h + dh, w + dw);
                    out.at4(c, tt / 2, h / 2, w / 2) = 0.125 * acc;
                }
    return t.op(std::move(out), {x},
                [x, C, T, H, W](Tape& tp, Tape::Node& n) {
                    Tensor& xg = tp.grad_mut(x);
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t tt = 0; tt + 1 < T; tt += 2)
                            for (std::size_t h = 0; h + 1 < H; h += 2)
                                for (std::size_t w = 0; w + 1 < W; w += 2) {
                                    double g = 0.125 * n.grad.at4(c, tt / 2, h / 2, w / 2);
                                    for (int dt = 0; dt < 2; ++dt)
                                        for (int dh = 0; dh < 2; ++dh)
                                            for (int dw = 0; dw < 2; ++dw)
                                                xg.at4(c, tt + dt, h + dh, w + dw) += g;
                                }
                },
                "avgpool3d");
}

Var add_channel_bias(Tape& t, Var x, Var b) {
    const Tensor& xv = t.value(x);
    require(xv.rank() == 4, "add_channel_bias", "input must be [B,C,H,W]");
    const std::size_t B = xv.extent(0), C = xv.extent(1), HW = xv.extent(2) * xv.extent(3);
    require(t.value(b).size() == C, "add_channel_bias", "bias length mismatch");
    Tensor out(xv.shape());
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t c = 0; c < C; ++c) {
            double bias = t.value(b)[c];
            const double* src = xv.data() + (bi * C + c) * HW;
            double* dst = out.data() + (bi * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) dst[i] = src[i] + bias;
        }
    return t.op(std::move(out), {x, b},
                [x, b, B, C, HW](Tape& tp, Tape::Node& n) {
                    Tensor& xg = tp.grad_mut(x);
                    Tensor& bg = tp.grad_mut(b);
                    for (std::size_t bi = 0; bi < B; ++bi)
                        for (std::size_t c = 0; c < C; ++c) {
                            const double* g = n.grad.data() + (bi * C + c) * HW;
                            double* xgp = xg.data() + (bi * C + c) * HW;
                            double acc = 0.0;
                            for (std::size_t i = 0; i < HW; ++i) {
                                xgp[i] += g[i];
                                acc += g[i];
                            }
                            bg[c] += acc;
                        }
                },
                "add_channel_bias");
}

Var channel_mean3d(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    require(xv.rank() == 4, "channel_mean3d", "input must be [C,T,H,W]");
    const std::size_t C = xv.extent(0), N = xv.extent(1) * xv.extent(2) * xv.extent(3);
    Tensor out({C});
    for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        const double* p = xv.data() + c * N;
        for (std::size_t i = 0; i < N; ++i) acc += p[i];
        out[c] = acc / static_cast<double>(N);
    }
    return t.op(std::move(out), {x},
                [x, C, N](Tape& tp, Tape::Node& n) {
                    Tensor& xg = tp.grad_mut(x);
                    for (std::size_t c = 0; c < C; ++c) {
                        double g = n.grad[c] / static_cast<double>(N);
                        double* p = xg.data() + c * N;
                        for (std::size_t i = 0; i < N; ++i) p[i] += g;
                    }
                },
                "channel_mean3d");
}

Var concat_channels(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(av.rank() == 4 && bv.rank() == 4, "concat_channels", "inputs must be [B,C,H,W]");
    require(av.extent(0) == bv.extent(0) && av.extent(2) == bv.extent(2) &&
                av.extent(3) == bv.extent(3),
            "concat_channels", "non-channel extents differ");
    const std::size_t B = av.extent(0), C1 = av.extent(1), C2 = bv.extent(1),
                      HW = av.extent(2) * av.extent(3);
    Tensor out({B, C1 + C2, av.extent(2), av.extent(3)});
    for (std::size_t bi = 0; bi < B; ++bi) {
        std::copy_n(av.data() + bi * C1 * HW, C1 * HW, out.data() + bi * (C1 + C2) * HW);
        std::copy_n(bv.data() + bi * C2 * HW, C2 * HW,
                    out.data() + (bi * (C1 + C2) + C1) * HW);
    }
    return t.op(std::move(out), {a, b},
                [a, b, B, C1, C2, HW](Tape& tp, Tape::Node& n) {
                    Tensor& ag = tp.grad_mut(a);
                    Tensor& bg = tp.grad_mut(b);
                    for (std::size_t bi = 0; bi < B; ++bi) {
                        const double* g = n.grad.data() + bi * (C1 + C2) * HW;
                        for (std::size_t i = 0; i < C1 * HW; ++i)
                            ag[bi * C1 * HW + i] += g[i];
                        for (std::size_t i = 0; i < C2 * HW; ++i)
                            bg[bi * C2 * HW + i] += g[C1 * HW + i];
                    }
                },
                "concat_channels");
}

Var temporal_mix(Tape& t, Var x, Var w) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    require(xv.rank() == 4, "temporal_mix", "input must be [T,C,H,W]");
    require(wv.rank() == 1 && wv.size() % 2 == 1, "temporal_mix", "window must be odd rank-1");
    const std::size_t T = xv.extent(0), F = xv.size() / T, K = wv.size();
    const long hk = static_cast<long>(K / 2);
    Tensor out(xv.shape());
    for (std::size_t tt = 0; tt < T; ++tt)
        for (std::size_t k = 0; k < K; ++k) {
            long src = static_cast<long>(tt) + static_cast<long>(k) - hk;
            if (src < 0 || src >= static_cast<long>(T)) continue;
            double wk = wv[k];
            const double* sp = xv.data() + static_cast<std::size_t>(src) * F;
            double* dp = out.data() + tt * F;
            for (std::size_t i = 0; i < F; ++i) dp[i] += wk * sp[i];
        }
    return t.op(std::move(out), {x, w},
                [x, w, T, F, K, hk](Tape& tp, Tape::Node& n) {
                    const Tensor& xv = tp.value(x);
                    const Tensor& wv = tp.value(w);
                    Tensor& xg = tp.grad_mut(x);
                    Tensor& wg = tp.grad_mut(w);
                    for (std::size_t tt = 0; tt < T; ++tt)
                        for (std::size_t k = 0; k < K; ++k) {
                            long src = static_cast<long>(tt) + static_cast<long>(k) - hk;
                            if (src < 0 || src >= static_cast<long>(T)) continue;
                            const double* g = n.grad.data() + tt * F;
                            const double* sp = xv.data() + static_cast<std::size_t>(src) * F;
                            double* xgp = xg.data() + static_cast<std::size_t>(src) * F;
                            double wk = wv[k];
                            double acc = 0.0;
                            for (std::size_t i = 0; i < F; ++i) {
                                xgp[i] += wk * g[i];
                                acc += g[i] * sp[i];
                            }
                            wg[k] += acc;
                        }
                },
                "temporal_mix");
}

Var flatten(Tape& t, Var x) {
    Tensor out({t.value(x).size()}, t.value(x).vec());
    return t.op(std::move(out), {x},
                [x](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i)
                        tp.accumulate(x, i, n.grad[i]);
                },
                "flatten");
}

Var reshape(Tape& t, Var x, std::vector<std::size_t> shape) {
    detail::require(Tensor::count(shape) == t.value(x).size(), "reshape",
                    "element count mismatch for " + t.value(x).shape_str());
    Tensor out(std::move(shape), t.value(x).vec());
    return t.op(std::move(out), {x},
                [x](Tape& tp, Tape::Node& n) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i)
                        tp.accumulate(x, i, n.grad[i]);
                },
                "reshape");
}

Var select(Tape& t, Var x, std::size_t flat_index) {
    detail::require(flat_index < t.value(x).size(), "select",
                    "index " + std::to_string(flat_index) + " out of range for " +
                        t.value(x).shape_str());
    return t.op(Tensor::scalar(t.value(x)[flat_index]), {x},
                [x, flat_index](Tape& tp, Tape::Node& n) {
                    tp.accumulate(x, flat_index, n.grad[0]);
                },
                "select");
}

Var sum(Tape& t, Var x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.value(x).size(); ++i) acc += t.value(x)[i];
    return t.op(Tensor::scalar(acc), {x},
                [x](Tape& tp, Tape::Node& n) {
                    double g = n.grad[0];
                    for (std::size_t i = 0; i < tp.value(x).size(); ++i)
                        tp.accumulate(x, i, g);
                },
                "sum");
}

Var mean(Tape& t, Var x) {
    return scale(t, sum(t, x), 1.0 / static_cast<double>(t.value(x).size()));
}

Var l1_norm(Tape& t, Var x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.value(x).size(); ++i) acc += std::fabs(t.value(x)[i]);
    return t.op(Tensor::scalar(acc), {x},
                [x](Tape& tp, Tape::Node& n) {
                    double g = n.grad[0];
                    const Tensor& xv = tp.value(x);
                    for (std::size_t i = 0; i < xv.size(); ++i) {
                        // subgradient 0 at 0
                        if (xv[i] > 0.0)
                            tp.accumulate(x, i, g);
                        else if (xv[i] < 0.0)
                            tp.accumulate(x, i, -g);
                    }
                },
                "l1_norm");
}

Var l2_norm(Tape& t, Var x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.value(x).size(); ++i) acc += t.value(x)[i] * t.value(x)[i];
    double nrm = std::sqrt(acc);
    return t.op(Tensor::scalar(nrm), {x},
                [x, nrm](Tape& tp, Tape::Node& n) {
                    if (nrm == 0.0) return;  // gradient 0 at the origin
                    double g = n.grad[0] / nrm;
                    const Tensor& xv = tp.value(x);
                    for (std::size_t i = 0; i < xv.size(); ++i)
                        tp.accumulate(x, i, g * xv[i]);
                },
                "l2_norm");
}

Var mse(Tape& t, Var a, Var b) {
    require_same_shape(t, "mse", a, b);
    Var d = sub(t, a, b);
    return mean(t, mul(t, d, d));
}

Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels) {
    const Tensor& lv = t.value(logits);
    require(lv.rank() == 2, "cross_entropy", "logits must be [B,K]");
    const std::size_t B = lv.extent(0), K = lv.extent(1);
    require(labels.size() == B, "cross_entropy", "label count mismatch");
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = lv.data() + b * K;
        double mx = row[0];
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        double lse = 0.0;
        for (std::size_t k = 0; k < K; ++k) lse += std::exp(row[k] - mx);
        lse = mx + std::log(lse);
        total += lse - row[static_cast<std::size_t>(labels[b])];
    }
    return t.op(Tensor::scalar(total / static_cast<double>(B)), {logits},
                [logits, labels, B, K](Tape& tp, Tape::Node& n) {
                    double g = n.grad[0] / static_cast<double>(B);
                    const Tensor& lv = tp.value(logits);
                    for (std::size_t b = 0; b < B; ++b) {
                        const double* row = lv.data() + b * K;
                        double mx = row[0];
                        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
                        double z = 0.0;
                        for (std::size_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
                        for (std::size_t k = 0; k < K; ++k) {
                            double p = std::exp(row[k] - mx) / z;
                            double onehot =
                                (static_cast<int>(k) == labels[b]) ? 1.0 : 0.0;
                            tp.accumulate(logits, b * K + k, g * (p - onehot));
                        }
                    }
                },
                "cross_entropy");
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

}  // namespace gvf::ad
