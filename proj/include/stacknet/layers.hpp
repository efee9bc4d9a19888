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

#ifndef STACKNET_LAYERS_HPP
#define STACKNET_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "stacknet/errors.hpp"
#include "stacknet/parallel.hpp"
#include "stacknet/tensor.hpp"

namespace stacknet {

enum class Padding { same, valid };

namespace detail {

/// Dot product with a fixed four-accumulator reduction tree. The summation
/// order is a pure function of the length, so results are bit-identical
/// regardless of threading or call site.
template <typename T>
inline T dot_fixed(const T* a, const T* b, std::int64_t len) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::int64_t i = 0;
    for (; i + 4 <= len; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < len; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

template <typename T>
inline T sum_fixed(const T* a, std::int64_t len) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::int64_t i = 0;
    for (; i + 4 <= len; i += 4) {
        s0 += a[i];
        s1 += a[i + 1];
        s2 += a[i + 2];
        s3 += a[i + 3];
    }
    for (; i < len; ++i) s0 += a[i];
    return (s0 + s1) + (s2 + s3);
}

} // namespace detail

// ---------------------------------------------------------------------------
// 2-D convolution (cross-correlation; no kernel flip)
// ---------------------------------------------------------------------------

/// kernel layout (outC, inC, r, r); same-padding pads with zeros and
/// requires odd r; bias may be empty (treated as zero).
///
/// out[n,o,y,x] = bias[o] + sum_{c,i,j} in[n,c,y+i-r/2, x+j-r/2] * k[o,c,i,j]
///
/// Per output element the accumulation order over (c,i,j) is fixed, so the
/// result is bit-deterministic for any thread count and any batch split.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel,
                 std::span<const T> bias, Padding pad) {
    if (kernel.c != input.c) {
        throw DimensionError("conv2d: kernel expects " + std::to_string(kernel.c) +
                             " input channels, got " + std::to_string(input.c));
    }
    if (kernel.h != kernel.w || kernel.h < 1) {
        throw DimensionError("conv2d: kernel must be square, got " + kernel.shape_str());
    }
    const std::int64_t r = kernel.h;
    if (pad == Padding::same && r % 2 == 0) {
        throw ConfigError("conv2d: same-padding requires an odd kernel size, got " +
                          std::to_string(r));
    }
    if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != kernel.n) {
        throw DimensionError("conv2d: bias length " + std::to_string(bias.size()) +
                             " != output channels " + std::to_string(kernel.n));
    }
    const std::int64_t p = (pad == Padding::same) ? r / 2 : 0;
    const std::int64_t oh = (pad == Padding::same) ? input.h : input.h - r + 1;
    const std::int64_t ow = (pad == Padding::same) ? input.w : input.w - r + 1;
    if (oh < 1 || ow < 1) {
        throw DimensionError("conv2d: input " + input.shape_str() +
                             " smaller than valid support of kernel " + kernel.shape_str());
    }

    Tensor<T> out(input.n, kernel.n, oh, ow);
    const std::int64_t ih = input.h, iw = input.w;
    const std::int64_t in_c = input.c, out_c = kernel.n;

    parallel_for(0, input.n * out_c, [&](std::int64_t task) {
        const std::int64_t n = task / out_c;
        const std::int64_t o = task % out_c;
        T* op = out.plane(n, o);
        const T b = bias.empty() ? T(0) : bias[static_cast<std::size_t>(o)];
        std::fill(op, op + oh * ow, b);
        for (std::int64_t c = 0; c < in_c; ++c) {
            const T* ip = input.plane(n, c);
            for (std::int64_t i = 0; i < r; ++i) {
                for (std::int64_t j = 0; j < r; ++j) {
                    const T wgt = kernel.at(o, c, i, j);
                    const std::int64_t dy = i - p, dx = j - p;
                    const std::int64_t y0 = std::max<std::int64_t>(0, -dy);
                    const std::int64_t y1 = std::min(oh, ih - dy);
                    const std::int64_t x0 = std::max<std::int64_t>(0, -dx);
                    const std::int64_t x1 = std::min(ow, iw - dx);
                    for (std::int64_t y = y0; y < y1; ++y) {
                        const T* src = ip + (y + dy) * iw + dx;
                        T* dst = op + y * ow;
                        for (std::int64_t x = x0; x < x1; ++x) dst[x] += wgt * src[x];
                    }
                }
            }
        }
    });
    return out;
}

template <typename T>
struct ConvGrads {
    Tensor<T> input;
    Tensor<T> kernel;
    std::vector<T> bias;
};

/// Exact adjoints of conv2d with respect to input, kernel and bias.
template <typename T>
ConvGrads<T> conv2d_adjoint(const Tensor<T>& input, const Tensor<T>& kernel,
                            const Tensor<T>& grad_out, Padding pad) {
    if (kernel.c != input.c || kernel.h != kernel.w) {
        throw DimensionError("conv2d_adjoint: kernel " + kernel.shape_str() +
                             " incompatible with input " + input.shape_str());
    }
    const std::int64_t r = kernel.h;
    const std::int64_t p = (pad == Padding::same) ? r / 2 : 0;
    const std::int64_t oh = (pad == Padding::same) ? input.h : input.h - r + 1;
    const std::int64_t ow = (pad == Padding::same) ? input.w : input.w - r + 1;
    if (grad_out.n != input.n || grad_out.c != kernel.n || grad_out.h != oh ||
        grad_out.w != ow) {
        throw DimensionError("conv2d_adjoint: grad_out " + grad_out.shape_str() +
                             " does not match conv2d output shape");
    }

    ConvGrads<T> g;
    g.input = Tensor<T>(input.n, input.c, input.h, input.w);
    g.kernel = Tensor<T>(kernel.n, kernel.c, kernel.h, kernel.w);
    g.bias.assign(static_cast<std::size_t>(kernel.n), T(0));

    const std::int64_t ih = input.h, iw = input.w;
    const std::int64_t in_c = input.c, out_c = kernel.n;

    // d/d input: gather form of the scatter above; fixed (o,i,j) order.
    parallel_for(0, input.n * in_c, [&](std::int64_t task) {
        const std::int64_t n = task / in_c;
        const std::int64_t c = task % in_c;
        T* gp = g.input.plane(n, c);
        for (std::int64_t o = 0; o < out_c; ++o) {
            const T* gop = grad_out.plane(n, o);
            for (std::int64_t i = 0; i < r; ++i) {
                for (std::int64_t j = 0; j < r; ++j) {
                    const T wgt = kernel.at(o, c, i, j);
                    const std::int64_t dy = i - p, dx = j - p;
                    const std::int64_t yy0 = std::max<std::int64_t>(dy, 0);
                    const std::int64_t yy1 = std::min(oh + dy, ih);
                    const std::int64_t xx0 = std::max<std::int64_t>(dx, 0);
                    const std::int64_t xx1 = std::min(ow + dx, iw);
                    for (std::int64_t yy = yy0; yy < yy1; ++yy) {
                        T* dst = gp + yy * iw;
                        const T* src = gop + (yy - dy) * ow - dx;
                        for (std::int64_t xx = xx0; xx < xx1; ++xx) dst[xx] += wgt * src[xx];
                    }
                }
            }
        }
    });

    // d/d kernel and d/d bias: fixed (n,y,x) order per element.
    parallel_for(0, out_c, [&](std::int64_t o) {
        for (std::int64_t c = 0; c < in_c; ++c) {
            for (std::int64_t i = 0; i < r; ++i) {
                for (std::int64_t j = 0; j < r; ++j) {
                    const std::int64_t dy = i - p, dx = j - p;
                    const std::int64_t y0 = std::max<std::int64_t>(0, -dy);
                    const std::int64_t y1 = std::min(oh, ih - dy);
                    const std::int64_t x0 = std::max<std::int64_t>(0, -dx);
                    const std::int64_t x1 = std::min(ow, iw - dx);
                    T acc = 0;
                    for (std::int64_t n = 0; n < input.n; ++n) {
                        const T* gop = grad_out.plane(n, o);
                        const T* ip = input.plane(n, c);
                        for (std::int64_t y = y0; y < y1; ++y) {
                            acc += detail::dot_fixed(gop + y * ow + x0,
                                                     ip + (y + dy) * iw + dx + x0, x1 - x0);
                        }
                    }
                    g.kernel.at(o, c, i, j) = acc;
                }
            }
        }
        T bacc = 0;
        for (std::int64_t n = 0; n < input.n; ++n) {
            bacc += detail::sum_fixed(grad_out.plane(n, o), oh * ow);
        }
        g.bias[static_cast<std::size_t>(o)] = bacc;
    });
    return g;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out(input.n, input.c, input.h, input.w);
    for (std::size_t i = 0; i < input.data.size(); ++i) {
        out.data[i] = input.data[i] > T(0) ? input.data[i] : T(0);
    }
    return out;
}

/// Derivative at exactly 0 is defined as 0.
template <typename T>
Tensor<T> relu_adjoint(const Tensor<T>& pre, const Tensor<T>& grad_out) {
    if (!pre.same_shape(grad_out)) {
        throw DimensionError("relu_adjoint: shape mismatch " + pre.shape_str() + " vs " +
                             grad_out.shape_str());
    }
    Tensor<T> g(pre.n, pre.c, pre.h, pre.w);
    for (std::size_t i = 0; i < pre.data.size(); ++i) {
        g.data[i] = pre.data[i] > T(0) ? grad_out.data[i] : T(0);
    }
    return g;
}

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2
// ---------------------------------------------------------------------------

template <typename T>
struct PoolResult {
    Tensor<T> output;
    /// For each output element (same index order), the flat offset of the
    /// winning input element within its (h*w) plane.
    std::vector<std::int32_t> argmax;
};

/// Ties break to the first element in row-major window order.
template <typename T>
PoolResult<T> maxpool2x2(const Tensor<T>& input) {
    if (input.h % 2 != 0 || input.w % 2 != 0) {
        throw DimensionError("maxpool2x2: H and W must be even, got " + input.shape_str());
    }
    const std::int64_t oh = input.h / 2, ow = input.w / 2;
    PoolResult<T> res;
    res.output = Tensor<T>(input.n, input.c, oh, ow);
    res.argmax.resize(static_cast<std::size_t>(res.output.numel()));
    const std::int64_t iw = input.w;

    parallel_for(0, input.n * input.c, [&](std::int64_t pl) {
        const T* ip = input.data.data() + pl * input.h * iw;
        T* op = res.output.data.data() + pl * oh * ow;
        std::int32_t* ap = res.argmax.data() + pl * oh * ow;
        for (std::int64_t y = 0; y < oh; ++y) {
            for (std::int64_t x = 0; x < ow; ++x) {
                const std::int64_t base = (2 * y) * iw + 2 * x;
                T best = ip[base];
                std::int64_t best_idx = base;
                const std::int64_t cands[3] = {base + 1, base + iw, base + iw + 1};
                for (std::int64_t k = 0; k < 3; ++k) {
                    if (ip[cands[k]] > best) {
                        best = ip[cands[k]];
                        best_idx = cands[k];
                    }
                }
                op[y * ow + x] = best;
                ap[y * ow + x] = static_cast<std::int32_t>(best_idx);
            }
        }
    });
    return res;
}

/// Routes each output gradient to the stored argmax position.
template <typename T>
Tensor<T> maxpool2x2_adjoint(const std::vector<std::int32_t>& argmax,
                             std::int64_t in_n, std::int64_t in_c, std::int64_t in_h,
                             std::int64_t in_w, const Tensor<T>& grad_out) {
    if (grad_out.n != in_n || grad_out.c != in_c || grad_out.h != in_h / 2 ||
        grad_out.w != in_w / 2 ||
        argmax.size() != static_cast<std::size_t>(grad_out.numel())) {
        throw DimensionError("maxpool2x2_adjoint: grad_out " + grad_out.shape_str() +
                             " does not match pooled shape");
    }
    Tensor<T> g(in_n, in_c, in_h, in_w);
    const std::int64_t planes = in_n * in_c;
    const std::int64_t osz = grad_out.h * grad_out.w;
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        T* gp = g.data.data() + pl * in_h * in_w;
        const T* gop = grad_out.data.data() + pl * osz;
        const std::int32_t* ap = argmax.data() + pl * osz;
        for (std::int64_t i = 0; i < osz; ++i) gp[ap[i]] += gop[i];
    }
    return g;
}

// ---------------------------------------------------------------------------
// Transposed convolution, 2x2 kernel, stride 2 (learned 2x upsampling)
// ---------------------------------------------------------------------------

/// kernel layout (inC, outC, 2, 2). Exact adjoint of a stride-2 valid
/// convolution: <y, tconv(x)> == <conv_stride2(y), x>.
template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& input, const Tensor<T>& kernel) {
    if (kernel.n != input.c) {
        throw DimensionError("transposed_conv2d: kernel expects " + std::to_string(kernel.n) +
                             " input channels, got " + std::to_string(input.c));
    }
    if (kernel.h != 2 || kernel.w != 2) {
        throw DimensionError("transposed_conv2d: kernel must be 2x2, got " +
                             kernel.shape_str());
    }
    const std::int64_t oh = 2 * input.h, ow = 2 * input.w;
    const std::int64_t in_c = input.c, out_c = kernel.c;
    Tensor<T> out(input.n, out_c, oh, ow);

    parallel_for(0, input.n * out_c, [&](std::int64_t task) {
        const std::int64_t n = task / out_c;
        const std::int64_t co = task % out_c;
        T* op = out.plane(n, co);
        for (std::int64_t ci = 0; ci < in_c; ++ci) {
            const T* ip = input.plane(n, ci);
            for (std::int64_t a = 0; a < 2; ++a) {
                for (std::int64_t b = 0; b < 2; ++b) {
                    const T wgt = kernel.at(ci, co, a, b);
                    for (std::int64_t y = 0; y < input.h; ++y) {
                        const T* src = ip + y * input.w;
                        T* dst = op + (2 * y + a) * ow + b;
                        for (std::int64_t x = 0; x < input.w; ++x) dst[2 * x] += wgt * src[x];
                    }
                }
            }
        }
    });
    return out;
}

template <typename T>
struct TConvGrads {
    Tensor<T> input;
    Tensor<T> kernel;
};

template <typename T>
TConvGrads<T> transposed_conv2d_adjoint(const Tensor<T>& input, const Tensor<T>& kernel,
                                        const Tensor<T>& grad_out) {
    if (grad_out.n != input.n || grad_out.c != kernel.c || grad_out.h != 2 * input.h ||
        grad_out.w != 2 * input.w) {
        throw DimensionError("transposed_conv2d_adjoint: grad_out " + grad_out.shape_str() +
                             " does not match upsampled shape");
    }
    const std::int64_t in_c = input.c, out_c = kernel.c;
    const std::int64_t ow = grad_out.w;
    TConvGrads<T> g;
    g.input = Tensor<T>(input.n, input.c, input.h, input.w);
    g.kernel = Tensor<T>(kernel.n, kernel.c, kernel.h, kernel.w);

    parallel_for(0, input.n * in_c, [&](std::int64_t task) {
        const std::int64_t n = task / in_c;
        const std::int64_t ci = task % in_c;
        T* gp = g.input.plane(n, ci);
        for (std::int64_t co = 0; co < out_c; ++co) {
            const T* gop = grad_out.plane(n, co);
            for (std::int64_t a = 0; a < 2; ++a) {
                for (std::int64_t b = 0; b < 2; ++b) {
                    const T wgt = kernel.at(ci, co, a, b);
                    for (std::int64_t y = 0; y < input.h; ++y) {
                        const T* src = gop + (2 * y + a) * ow + b;
                        T* dst = gp + y * input.w;
                        for (std::int64_t x = 0; x < input.w; ++x) dst[x] += wgt * src[2 * x];
                    }
                }
            }
        }
    });

    parallel_for(0, in_c, [&](std::int64_t ci) {
        for (std::int64_t co = 0; co < out_c; ++co) {
            for (std::int64_t a = 0; a < 2; ++a) {
                for (std::int64_t b = 0; b < 2; ++b) {
                    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
                    for (std::int64_t n = 0; n < input.n; ++n) {
                        const T* ip = input.plane(n, ci);
                        const T* gop = grad_out.plane(n, co);
                        for (std::int64_t y = 0; y < input.h; ++y) {
                            const T* src = ip + y * input.w;
                            const T* go = gop + (2 * y + a) * ow + b;
                            std::int64_t x = 0;
                            for (; x + 4 <= input.w; x += 4) {
                                s0 += src[x] * go[2 * x];
                                s1 += src[x + 1] * go[2 * (x + 1)];
                                s2 += src[x + 2] * go[2 * (x + 2)];
                                s3 += src[x + 3] * go[2 * (x + 3)];
                            }
                            for (; x < input.w; ++x) s0 += src[x] * go[2 * x];
                        }
                    }
                    g.kernel.at(ci, co, a, b) = (s0 + s1) + (s2 + s3);
                }
            }
        }
    });
    return g;
}

// ---------------------------------------------------------------------------
// Channel concatenation (skip connections)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw DimensionError("concat_channels: " + a.shape_str() + " vs " + b.shape_str());
    }
    Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
    const std::size_t pa = static_cast<std::size_t>(a.c * a.h * a.w);
    const std::size_t pb = static_cast<std::size_t>(b.c * b.h * b.w);
    for (std::int64_t n = 0; n < a.n; ++n) {
        std::memcpy(out.plane(n, 0), a.plane(n, 0), pa * sizeof(T));
        std::memcpy(out.plane(n, a.c), b.plane(n, 0), pb * sizeof(T));
    }
    return out;
}

/// Adjoint of concat_channels: splits grad_out back into the two inputs.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& grad_out, std::int64_t ca,
                                               std::int64_t cb) {
    if (grad_out.c != ca + cb) {
        throw DimensionError("split_channels: channel count " + std::to_string(grad_out.c) +
                             " != " + std::to_string(ca) + "+" + std::to_string(cb));
    }
    Tensor<T> a(grad_out.n, ca, grad_out.h, grad_out.w);
    Tensor<T> b(grad_out.n, cb, grad_out.h, grad_out.w);
    const std::size_t pa = static_cast<std::size_t>(ca * grad_out.h * grad_out.w);
    const std::size_t pb = static_cast<std::size_t>(cb * grad_out.h * grad_out.w);
    for (std::int64_t n = 0; n < grad_out.n; ++n) {
        std::memcpy(a.plane(n, 0), grad_out.plane(n, 0), pa * sizeof(T));
        std::memcpy(b.plane(n, 0), grad_out.plane(n, ca), pb * sizeof(T));
    }
    return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Sigmoid
// ---------------------------------------------------------------------------

template <typename T>
inline T sigmoid_scalar(T v) {
    if (v >= T(0)) {
        return T(1) / (T(1) + std::exp(-v));
    }
    const T e = std::exp(v);
    return e / (T(1) + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
    Tensor<T> out(input.n, input.c, input.h, input.w);
    for (std::size_t i = 0; i < input.data.size(); ++i) {
        out.data[i] = sigmoid_scalar(input.data[i]);
    }
    return out;
}

/// Takes the forward *output* s = sigmoid(v); returns s*(1-s)*grad_out.
template <typename T>
Tensor<T> sigmoid_adjoint(const Tensor<T>& out, const Tensor<T>& grad_out) {
    if (!out.same_shape(grad_out)) {
        throw DimensionError("sigmoid_adjoint: shape mismatch " + out.shape_str() + " vs " +
                             grad_out.shape_str());
    }
    Tensor<T> g(out.n, out.c, out.h, out.w);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        g.data[i] = out.data[i] * (T(1) - out.data[i]) * grad_out.data[i];
    }
    return g;
}

} // namespace stacknet

#endif // STACKNET_LAYERS_HPP
