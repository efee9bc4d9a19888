/*
 * Copyright 2026 the stacknet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stacknet/grad_check.hpp"
#include "stacknet/layers.hpp"
#include "stacknet/rng.hpp"

using namespace stacknet;

namespace {

Tensord random_tensor(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                      Rng& rng, double scale = 1.0) {
    Tensord t(n, c, h, w);
    for (double& v : t.data) v = scale * rng.normal();
    return t;
}

double inner(const Tensord& a, const Tensord& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

/// Independent direct-summation convolution: six explicit loops straight
/// from the definition, no shared code with the implementation.
Tensord conv_reference(const Tensord& x, const Tensord& k, const std::vector<double>& bias,
                       bool same) {
    const std::int64_t r = k.h;
    const std::int64_t p = same ? r / 2 : 0;
    const std::int64_t oh = same ? x.h : x.h - r + 1;
    const std::int64_t ow = same ? x.w : x.w - r + 1;
    Tensord out(x.n, k.n, oh, ow);
    for (std::int64_t n = 0; n < x.n; ++n) {
        for (std::int64_t o = 0; o < k.n; ++o) {
            for (std::int64_t y = 0; y < oh; ++y) {
                for (std::int64_t xx = 0; xx < ow; ++xx) {
                    double acc = bias.empty() ? 0.0 : bias[(std::size_t)o];
                    for (std::int64_t c = 0; c < x.c; ++c) {
                        for (std::int64_t i = 0; i < r; ++i) {
                            for (std::int64_t j = 0; j < r; ++j) {
                                const std::int64_t sy = y + i - p;
                                const std::int64_t sx = xx + j - p;
                                if (sy < 0 || sy >= x.h || sx < 0 || sx >= x.w) continue;
                                acc += x.at(n, c, sy, sx) * k.at(o, c, i, j);
                            }
                        }
                    }
                    out.at(n, o, y, xx) = acc;
                }
            }
        }
    }
    return out;
}

/// Stride-2 valid convolution used as the oracle side of the transposed
/// convolution adjoint identity; kernel layout (inC, outC, 2, 2) shared
/// with transposed_conv2d.
Tensord conv_stride2_reference(const Tensord& y, const Tensord& k) {
    Tensord out(y.n, k.n, y.h / 2, y.w / 2);
    for (std::int64_t n = 0; n < y.n; ++n) {
        for (std::int64_t ci = 0; ci < k.n; ++ci) {
            for (std::int64_t py = 0; py < out.h; ++py) {
                for (std::int64_t px = 0; px < out.w; ++px) {
                    double acc = 0.0;
                    for (std::int64_t co = 0; co < k.c; ++co) {
                        for (std::int64_t a = 0; a < 2; ++a) {
                            for (std::int64_t b = 0; b < 2; ++b) {
                                acc += y.at(n, co, 2 * py + a, 2 * px + b) *
                                       k.at(ci, co, a, b);
                            }
                        }
                    }
                    out.at(n, ci, py, px) = acc;
                }
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("conv2d: 1x1 inner product") {
    Tensord x(1, 1, 1, 1);
    x.data[0] = 2.0;
    Tensord k(1, 1, 1, 1);
    k.data[0] = 3.0;
    const std::vector<double> bias{0.0};
    const Tensord out = conv2d(x, k, std::span<const double>(bias), Padding::same);
    CHECK(out.data[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("conv2d: all-ones 3x3 against direct summation") {
    Tensord x(1, 1, 3, 3, 1.0);
    Tensord k(1, 1, 3, 3, 1.0);
    const Tensord out = conv2d(x, k, std::span<const double>{}, Padding::same);
    // Border positions see 4 or 6 in-bounds taps, the center all 9.
    const double expected[9] = {4, 6, 4, 6, 9, 6, 4, 6, 4};
    for (int i = 0; i < 9; ++i) CHECK(out.data[(std::size_t)i] == expected[i]);

    const Tensord ref = conv_reference(x, k, {}, true);
    for (int i = 0; i < 9; ++i) CHECK(out.data[(std::size_t)i] == ref.data[(std::size_t)i]);
}

TEST_CASE("conv2d: identity kernel is the identity map, exactly") {
    Rng rng(11);
    const Tensord x = random_tensor(2, 3, 6, 7, rng);
    Tensord k(3, 3, 3, 3);
    for (std::int64_t o = 0; o < 3; ++o) k.at(o, o, 1, 1) = 1.0;
    const Tensord out = conv2d(x, k, std::span<const double>{}, Padding::same);
    REQUIRE(out.same_shape(x));
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(out.data[i] == x.data[i]);
}

TEST_CASE("conv2d: random tensors match the reference in both padding modes") {
    Rng rng(22);
    const Tensord x = random_tensor(2, 3, 7, 9, rng);
    const Tensord k = random_tensor(4, 3, 3, 3, rng);
    std::vector<double> bias{0.1, -0.2, 0.3, 0.4};
    for (const Padding pad : {Padding::same, Padding::valid}) {
        const Tensord out = conv2d(x, k, std::span<const double>(bias), pad);
        const Tensord ref = conv_reference(x, k, bias, pad == Padding::same);
        REQUIRE(out.same_shape(ref));
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("conv2d: shape and config errors") {
    Tensord x(1, 2, 4, 4);
    Tensord k_badc(1, 3, 3, 3);
    CHECK_THROWS_AS((void)conv2d(x, k_badc, std::span<const double>{}, Padding::same),
                    DimensionError);
    Tensord k_even(1, 2, 2, 2);
    CHECK_THROWS_AS((void)conv2d(x, k_even, std::span<const double>{}, Padding::same),
                    ConfigError);
    CHECK_NOTHROW((void)conv2d(x, k_even, std::span<const double>{}, Padding::valid));
}

TEST_CASE("conv2d_adjoint: zero grad_out gives zero gradients") {
    Rng rng(33);
    const Tensord x = random_tensor(1, 2, 5, 5, rng);
    const Tensord k = random_tensor(3, 2, 3, 3, rng);
    Tensord gout(1, 3, 5, 5);
    const auto g = conv2d_adjoint(x, k, gout, Padding::same);
    for (double v : g.input.data) CHECK(v == 0.0);
    for (double v : g.kernel.data) CHECK(v == 0.0);
    for (double v : g.bias) CHECK(v == 0.0);
}

TEST_CASE("conv2d_adjoint: 1x1 kernel closed form") {
    Rng rng(44);
    const Tensord x = random_tensor(2, 1, 4, 4, rng);
    const Tensord k = random_tensor(1, 1, 1, 1, rng);
    const Tensord gout = random_tensor(2, 1, 4, 4, rng);
    const auto g = conv2d_adjoint(x, k, gout, Padding::same);
    // gradKernel collapses to sum(input * grad_out).
    double expected = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) expected += x.data[i] * gout.data[i];
    CHECK(g.kernel.data[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("conv2d_adjoint: matches central finite differences on random 2x3x5x5") {
    Rng rng(55);
    for (const Padding pad : {Padding::same, Padding::valid}) {
        Tensord x = random_tensor(2, 3, 5, 5, rng);
        Tensord k = random_tensor(2, 3, 3, 3, rng, 0.5);
        std::vector<double> bias{0.05, -0.07};
        const std::int64_t oh = pad == Padding::same ? x.h : x.h - 2;
        const Tensord w = random_tensor(2, 2, oh, oh, rng);

        const auto g = conv2d_adjoint(x, k, w, pad);
        Tensord bias_t(1, 2, 1, 1), bias_g(1, 2, 1, 1);
        bias_t.data = {bias[0], bias[1]};
        bias_g.data = {g.bias[0], g.bias[1]};

        auto scalar = [&] {
            bias[0] = bias_t.data[0];
            bias[1] = bias_t.data[1];
            return inner(w, conv2d(x, k, std::span<const double>(bias), pad));
        };
        std::vector<FlatParamView> views{view_of(x, g.input, "input"),
                                         view_of(k, g.kernel, "kernel"),
                                         view_of(bias_t, bias_g, "bias")};
        const auto report = finite_diff_check(scalar, views);
        CHECK(report.max_rel_err < 1e-5);
    }
}

TEST_CASE("relu: forward values and adjoint mask") {
    Tensord x(1, 1, 1, 3);
    x.data = {-1.0, 0.0, 2.0};
    const Tensord y = relu(x);
    CHECK(y.data[0] == 0.0);
    CHECK(y.data[1] == 0.0);
    CHECK(y.data[2] == 2.0);

    Tensord all_neg(1, 1, 2, 2, -3.5);
    for (double v : relu(all_neg).data) CHECK(v == 0.0);

    Tensord pre(1, 1, 1, 3);
    pre.data = {3.0, -3.0, 0.0};
    Tensord gout(1, 1, 1, 3, 5.0);
    const Tensord g = relu_adjoint(pre, gout);
    CHECK(g.data[0] == 5.0);
    CHECK(g.data[1] == 0.0);
    CHECK(g.data[2] == 0.0); // derivative at exactly 0 is 0
}

TEST_CASE("maxpool2x2: window maxima and argmax routing") {
    Tensord x(1, 1, 2, 2);
    x.data = {1, 2, 3, 4};
    const auto r = maxpool2x2(x);
    CHECK(r.output.numel() == 1);
    CHECK(r.output.data[0] == 4.0);

    Tensord seq(1, 1, 4, 4);
    for (int i = 0; i < 16; ++i) seq.data[(std::size_t)i] = i + 1;
    const auto r2 = maxpool2x2(seq);
    // Window enumeration: maxima of the four disjoint 2x2 windows.
    const double expected[4] = {6, 8, 14, 16};
    for (int i = 0; i < 4; ++i) CHECK(r2.output.data[(std::size_t)i] == expected[i]);

    Tensord constant(2, 3, 4, 6, 7.25);
    const auto r3 = maxpool2x2(constant);
    CHECK(r3.output.h == 2);
    CHECK(r3.output.w == 3);
    for (double v : r3.output.data) CHECK(v == 7.25);
    // Ties break to the first element in row-major window order.
    CHECK(r3.argmax[0] == 0);

    Tensord odd(1, 1, 3, 4);
    CHECK_THROWS_AS((void)maxpool2x2(odd), DimensionError);

    Tensord gout(1, 1, 2, 2);
    gout.data = {1, 2, 3, 4};
    const Tensord g = maxpool2x2_adjoint(r2.argmax, 1, 1, 4, 4, gout);
    CHECK(g.at(0, 0, 1, 1) == 1.0); // value 6
    CHECK(g.at(0, 0, 1, 3) == 2.0); // value 8
    CHECK(g.at(0, 0, 3, 1) == 3.0); // value 14
    CHECK(g.at(0, 0, 3, 3) == 4.0); // value 16
    CHECK(g.at(0, 0, 0, 0) == 0.0);
}

TEST_CASE("maxpool2x2 then nearest upsample never increases any element") {
    Rng rng(66);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensord x = random_tensor(1, 2, 8, 8, rng);
        const auto r = maxpool2x2(x);
        for (std::int64_t c = 0; c < x.c; ++c) {
            for (std::int64_t y = 0; y < x.h; ++y) {
                for (std::int64_t xx = 0; xx < x.w; ++xx) {
                    CHECK(r.output.at(0, c, y / 2, xx / 2) >= x.at(0, c, y, xx));
                }
            }
        }
    }
}

TEST_CASE("transposed_conv2d: single-pixel expansion stamps the kernel") {
    Tensord x(1, 1, 1, 1, 1.0);
    Tensord k(1, 1, 2, 2);
    k.data = {1.5, -2.0, 3.0, 0.25};
    const Tensord out = transposed_conv2d(x, k);
    REQUIRE(out.h == 2);
    REQUIRE(out.w == 2);
    for (int i = 0; i < 4; ++i) CHECK(out.data[(std::size_t)i] == k.data[(std::size_t)i]);
}

TEST_CASE("transposed_conv2d: per-pixel stamping on a 1x2 input") {
    Tensord x(1, 1, 1, 2, 1.0);
    Tensord k(1, 1, 2, 2, 1.0);
    const Tensord out = transposed_conv2d(x, k);
    REQUIRE(out.h == 2);
    REQUIRE(out.w == 4);
    for (double v : out.data) CHECK(v == 1.0);
}

TEST_CASE("transposed_conv2d: adjoint identity against the stride-2 oracle") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensord x = random_tensor(2, 3, 4, 5, rng);
        const Tensord k = random_tensor(3, 2, 2, 2, rng);
        const Tensord y = random_tensor(2, 2, 8, 10, rng);
        const double lhs = inner(y, transposed_conv2d(x, k));
        const double rhs = inner(conv_stride2_reference(y, k), x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("transposed_conv2d_adjoint: matches finite differences") {
    Rng rng(88);
    Tensord x = random_tensor(1, 2, 3, 3, rng);
    Tensord k = random_tensor(2, 3, 2, 2, rng);
    const Tensord w = random_tensor(1, 3, 6, 6, rng);
    const auto g = transposed_conv2d_adjoint(x, k, w);
    auto scalar = [&] { return inner(w, transposed_conv2d(x, k)); };
    std::vector<FlatParamView> views{view_of(x, g.input, "input"),
                                     view_of(k, g.kernel, "kernel")};
    const auto report = finite_diff_check(scalar, views);
    CHECK(report.max_rel_err < 1e-9); // linear in both arguments
}

TEST_CASE("concat_channels: layout and errors") {
    Rng rng(99);
    const Tensord a = random_tensor(1, 2, 4, 4, rng);
    const Tensord b = random_tensor(1, 3, 4, 4, rng);
    const Tensord cat = concat_channels(a, b);
    CHECK(cat.c == 5);
    for (std::int64_t y = 0; y < 4; ++y) {
        for (std::int64_t x = 0; x < 4; ++x) {
            CHECK(cat.at(0, 0, y, x) == a.at(0, 0, y, x));
            CHECK(cat.at(0, 2, y, x) == b.at(0, 0, y, x));
        }
    }
    const Tensord bad(1, 3, 5, 4);
    CHECK_THROWS_AS((void)concat_channels(a, bad), DimensionError);

    const auto [ga, gb] = split_channels(cat, 2, 3);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(ga.data[i] == a.data[i]);
    for (std::size_t i = 0; i < b.data.size(); ++i) CHECK(gb.data[i] == b.data[i]);
}

TEST_CASE("sigmoid: values, symmetry, saturation, adjoint") {
    Tensord zero(1, 1, 1, 1, 0.0);
    CHECK(sigmoid(zero).data[0] == 0.5);

    Rng rng(111);
    for (int i = 0; i < 50; ++i) {
        const double v = rng.uniform(-30.0, 30.0);
        Tensord t(1, 1, 1, 1, v);
        Tensord tn(1, 1, 1, 1, -v);
        CHECK(sigmoid(t).data[0] ==
              doctest::Approx(1.0 - sigmoid(tn).data[0]).epsilon(1e-12));
    }

    Tensord big(1, 1, 1, 2);
    big.data = {100.0, 1000.0};
    const Tensord s = sigmoid(big);
    CHECK(1.0 - s.data[0] < 1e-30); // value in (1 - 1e-30, 1]
    CHECK(s.data[0] <= 1.0);
    CHECK(std::isfinite(s.data[1]));
    Tensord neg(1, 1, 1, 1, -1000.0);
    CHECK(sigmoid(neg).data[0] >= 0.0);
    CHECK(std::isfinite(sigmoid(neg).data[0]));

    // adjoint = s(1-s)*g
    Tensord pre(1, 1, 1, 1, 0.7);
    const Tensord out = sigmoid(pre);
    Tensord gout(1, 1, 1, 1, 2.0);
    const Tensord g = sigmoid_adjoint(out, gout);
    CHECK(g.data[0] ==
          doctest::Approx(out.data[0] * (1.0 - out.data[0]) * 2.0).epsilon(1e-12));
}

TEST_CASE("adjoint inner-product identity holds for every layer op") {
    Rng rng(123);
    for (int trial = 0; trial < 5; ++trial) {
        // conv2d with respect to its input
        {
            const Tensord dx = random_tensor(2, 2, 6, 6, rng);
            const Tensord k = random_tensor(3, 2, 3, 3, rng);
            const Tensord w = random_tensor(2, 3, 6, 6, rng);
            const Tensord x0 = random_tensor(2, 2, 6, 6, rng);
            const auto g = conv2d_adjoint(x0, k, w, Padding::same);
            const double lhs = inner(w, conv2d(dx, k, std::span<const double>{}, Padding::same));
            const double rhs = inner(g.input, dx);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
        // transposed conv with respect to its input
        {
            const Tensord dx = random_tensor(1, 2, 4, 4, rng);
            const Tensord k = random_tensor(2, 3, 2, 2, rng);
            const Tensord w = random_tensor(1, 3, 8, 8, rng);
            const Tensord x0 = random_tensor(1, 2, 4, 4, rng);
            const auto g = transposed_conv2d_adjoint(x0, k, w);
            CHECK(inner(w, transposed_conv2d(dx, k)) ==
                  doctest::Approx(inner(g.input, dx)).epsilon(1e-10));
        }
        // relu at a point: Jacobian is the >0 mask of the pre-activations
        {
            const Tensord pre = random_tensor(1, 2, 4, 4, rng);
            const Tensord dx = random_tensor(1, 2, 4, 4, rng);
            const Tensord w = random_tensor(1, 2, 4, 4, rng);
            Tensord jdx(1, 2, 4, 4);
            for (std::size_t i = 0; i < pre.data.size(); ++i) {
                jdx.data[i] = pre.data[i] > 0.0 ? dx.data[i] : 0.0;
            }
            CHECK(inner(w, jdx) ==
                  doctest::Approx(inner(relu_adjoint(pre, w), dx)).epsilon(1e-10));
        }
        // maxpool at a point: Jacobian is selection at the stored argmax
        {
            const Tensord x = random_tensor(1, 2, 4, 4, rng);
            const Tensord dx = random_tensor(1, 2, 4, 4, rng);
            const auto res = maxpool2x2(x);
            const Tensord w = random_tensor(1, 2, 2, 2, rng);
            Tensord jdx(1, 2, 2, 2);
            for (std::int64_t pl = 0; pl < 2; ++pl) {
                for (std::int64_t i = 0; i < 4; ++i) {
                    jdx.data[(std::size_t)(pl * 4 + i)] =
                        dx.data[(std::size_t)(pl * 16 + res.argmax[(std::size_t)(pl * 4 + i)])];
                }
            }
            const Tensord adj = maxpool2x2_adjoint(res.argmax, 1, 2, 4, 4, w);
            CHECK(inner(w, jdx) == doctest::Approx(inner(adj, dx)).epsilon(1e-10));
        }
        // concat with respect to both inputs
        {
            const Tensord da = random_tensor(1, 2, 3, 3, rng);
            const Tensord db = random_tensor(1, 1, 3, 3, rng);
            const Tensord w = random_tensor(1, 3, 3, 3, rng);
            const auto [ga, gb] = split_channels(w, 2, 1);
            CHECK(inner(w, concat_channels(da, db)) ==
                  doctest::Approx(inner(ga, da) + inner(gb, db)).epsilon(1e-10));
        }
        // sigmoid at a point
        {
            const Tensord pre = random_tensor(1, 1, 4, 4, rng);
            const Tensord out = sigmoid(pre);
            const Tensord dx = random_tensor(1, 1, 4, 4, rng);
            const Tensord w = random_tensor(1, 1, 4, 4, rng);
            Tensord jdx(1, 1, 4, 4);
            for (std::size_t i = 0; i < pre.data.size(); ++i) {
                jdx.data[i] = out.data[i] * (1.0 - out.data[i]) * dx.data[i];
            }
            CHECK(inner(w, jdx) ==
                  doctest::Approx(inner(sigmoid_adjoint(out, w), dx)).epsilon(1e-10));
        }
    }
}

TEST_CASE("determinism: batch decomposition and thread count do not change bits") {
    Rng rng(321);
    const Tensord x = random_tensor(3, 2, 8, 8, rng);
    const Tensord k = random_tensor(4, 2, 3, 3, rng);
    std::vector<double> bias{0.1, 0.2, 0.3, 0.4};

    const Tensord whole = conv2d(x, k, std::span<const double>(bias), Padding::same);
    for (std::int64_t n = 0; n < 3; ++n) {
        Tensord item(1, 2, 8, 8);
        std::copy_n(x.plane(n, 0), item.data.size(), item.data.data());
        const Tensord single = conv2d(item, k, std::span<const double>(bias), Padding::same);
        for (std::size_t i = 0; i < single.data.size(); ++i) {
            CHECK(whole.data.data()[n * 4 * 64 + (std::int64_t)i] == single.data[i]);
        }
    }

    set_max_threads(1);
    const Tensord serial = conv2d(x, k, std::span<const double>(bias), Padding::same);
    const auto serial_adj = conv2d_adjoint(x, k, whole, Padding::same);
    set_max_threads(4);
    const Tensord threaded = conv2d(x, k, std::span<const double>(bias), Padding::same);
    const auto threaded_adj = conv2d_adjoint(x, k, whole, Padding::same);
    set_max_threads(0);
    CHECK(serial.data == threaded.data);
    CHECK(serial_adj.input.data == threaded_adj.input.data);
    CHECK(serial_adj.kernel.data == threaded_adj.kernel.data);
    CHECK(serial_adj.bias == threaded_adj.bias);
}

TEST_CASE("grad_check harness: finite differences on a linear op are exact") {
    Rng rng(222);
    Tensord x = random_tensor(1, 1, 4, 4, rng);
    Tensord k = random_tensor(1, 1, 1, 1, rng);
    const Tensord w = random_tensor(1, 1, 4, 4, rng);
    const auto g = conv2d_adjoint(x, k, w, Padding::same);
    auto scalar = [&] { return inner(w, conv2d(x, k, std::span<const double>{}, Padding::same)); };
    std::vector<FlatParamView> views{view_of(x, g.input, "input"),
                                     view_of(k, g.kernel, "kernel")};
    const auto report = finite_diff_check(scalar, views);
    CHECK(report.max_rel_err < 1e-9);
    CHECK(report.elements_checked == 17);
}

TEST_CASE("conv2d_adjoint: finite differences with a 5x5 kernel") {
    Rng rng(66);
    Tensord x = random_tensor(1, 2, 6, 6, rng);
    Tensord k = random_tensor(2, 2, 5, 5, rng, 0.3);
    const Tensord w = random_tensor(1, 2, 6, 6, rng);
    const auto g = conv2d_adjoint(x, k, w, Padding::same);
    auto scalar = [&] { return inner(w, conv2d(x, k, std::span<const double>{}, Padding::same)); };
    std::vector<FlatParamView> views{view_of(x, g.input, "input"),
                                     view_of(k, g.kernel, "kernel")};
    CHECK(finite_diff_check(scalar, views).max_rel_err < 1e-5);
}
