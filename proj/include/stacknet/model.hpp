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

#ifndef STACKNET_MODEL_HPP
#define STACKNET_MODEL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stacknet/bytes.hpp"
#include "stacknet/errors.hpp"
#include "stacknet/layers.hpp"
#include "stacknet/rng.hpp"
#include "stacknet/tensor.hpp"

namespace stacknet {

/// Fully determines the network: encoder-decoder with two convolutional
/// stacks of depth L and kernel r before the first two pooling steps,
/// a two-conv third stage, a two-conv bottleneck, three two-conv decoder
/// stages fed by learned 2x upsampling and skip concatenations, and a
/// final 1x1 classifier with sigmoid output.
struct StackNetConfig {
    int kernel_r = 3;            ///< stack kernel size (3 or 5); odd
    int stack_depth_L = 5;       ///< convolutions per stack, >= 1
    int in_channels = 2;         ///< FLAIR + T1
    std::array<int, 4> channel_widths{64, 96, 128, 256}; ///< c1..c3 + bottleneck
    int input_h = 200;           ///< nominal slice height, multiple of 8
    int input_w = 200;           ///< nominal slice width, multiple of 8
    std::uint64_t seed = 0;      ///< weight initialization seed

    bool operator==(const StackNetConfig&) const = default;

    void validate() const {
        if (kernel_r < 1 || kernel_r % 2 == 0) {
            throw ConfigError("kernel_r must be odd and positive, got " +
                              std::to_string(kernel_r));
        }
        if (stack_depth_L < 1) {
            throw ConfigError("stack_depth_L must be >= 1, got " +
                              std::to_string(stack_depth_L));
        }
        if (in_channels < 1) {
            throw ConfigError("in_channels must be >= 1, got " + std::to_string(in_channels));
        }
        for (int wdt : channel_widths) {
            if (wdt < 1) throw ConfigError("channel widths must be >= 1");
        }
        if (input_h < 8 || input_h % 8 != 0 || input_w < 8 || input_w % 8 != 0) {
            throw ConfigError("input dims must be positive multiples of 8, got " +
                              std::to_string(input_h) + "x" + std::to_string(input_w));
        }
    }
};

/// Activations recorded during a forward pass, consumed by backward().
template <typename T>
struct StackNetCache {
    struct ConvTrace {
        Tensor<T> input; ///< tensor the convolution consumed
        Tensor<T> pre;   ///< convolution output before the nonlinearity
    };
    struct PoolTrace {
        std::vector<std::int32_t> argmax;
        std::int64_t n = 0, c = 0, h = 0, w = 0; ///< pool input shape
    };

    bool valid = false;
    std::vector<ConvTrace> stack1, stack2;
    std::array<ConvTrace, 2> stage3, bottleneck, dec3, dec2, dec1;
    PoolTrace pool1, pool2, pool3;
    Tensor<T> up3_in, up2_in, up1_in;
    ConvTrace head;
    Tensor<T> prob; ///< final sigmoid output

    /// Smallest |pre-activation| seen by any ReLU; finite-difference checks
    /// resample their inputs when this is within the kink tolerance.
    double min_abs_preactivation() const {
        double m = std::numeric_limits<double>::infinity();
        auto scan = [&m](const ConvTrace& t) {
            for (T v : t.pre.data) m = std::min(m, std::abs(static_cast<double>(v)));
        };
        for (const auto& t : stack1) scan(t);
        for (const auto& t : stack2) scan(t);
        for (const auto& t : stage3) scan(t);
        for (const auto& t : bottleneck) scan(t);
        for (const auto& t : dec3) scan(t);
        for (const auto& t : dec2) scan(t);
        for (const auto& t : dec1) scan(t);
        return m;
    }
};

template <typename T>
class StackNet {
public:
    explicit StackNet(const StackNetConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        build();
    }

    const StackNetConfig& config() const { return cfg_; }

    /// Count of convolutional, de-convolutional and classifier layers:
    /// 14 + 2L for this topology.
    int layer_count() const {
        return static_cast<int>(stack1_.size() + stack2_.size()) + 2 + 2 // encoder
               + 3                                                       // transposed convs
               + 6                                                       // decoder convs
               + 1;                                                      // 1x1 classifier
    }

    /// Runs the network on a batch (N, in_channels, H, W) with H and W
    /// multiples of 8. Output is (N, 1, H, W) with values in (0, 1).
    /// Pass a cache to enable backward().
    Tensor<T> forward(const Tensor<T>& batch, StackNetCache<T>* cache = nullptr) const {
        if (batch.c != cfg_.in_channels) {
            throw DimensionError("forward: expected " + std::to_string(cfg_.in_channels) +
                                 " channels, got " + std::to_string(batch.c));
        }
        if (batch.h < 8 || batch.w < 8 || batch.h % 8 != 0 || batch.w % 8 != 0) {
            throw DimensionError("forward: spatial dims must be multiples of 8, got " +
                                 batch.shape_str());
        }
        if (cache) {
            *cache = StackNetCache<T>{};
            cache->stack1.resize(stack1_.size());
            cache->stack2.resize(stack2_.size());
        }

        Tensor<T> a = batch;
        for (std::size_t l = 0; l < stack1_.size(); ++l) {
            a = conv_relu(stack1_[l], a, cache ? &cache->stack1[l] : nullptr);
        }
        Tensor<T> s1 = a;
        a = pool(s1, cache ? &cache->pool1 : nullptr);

        for (std::size_t l = 0; l < stack2_.size(); ++l) {
            a = conv_relu(stack2_[l], a, cache ? &cache->stack2[l] : nullptr);
        }
        Tensor<T> s2 = a;
        a = pool(s2, cache ? &cache->pool2 : nullptr);

        for (std::size_t l = 0; l < 2; ++l) {
            a = conv_relu(stage3_[l], a, cache ? &cache->stage3[l] : nullptr);
        }
        Tensor<T> s3 = a;
        a = pool(s3, cache ? &cache->pool3 : nullptr);

        for (std::size_t l = 0; l < 2; ++l) {
            a = conv_relu(bottleneck_[l], a, cache ? &cache->bottleneck[l] : nullptr);
        }

        if (cache) cache->up3_in = a;
        a = transposed_conv2d(a, up3_.kernel.value);
        a = concat_channels(a, s3);
        for (std::size_t l = 0; l < 2; ++l) {
            a = conv_relu(dec3_[l], a, cache ? &cache->dec3[l] : nullptr);
        }

        if (cache) cache->up2_in = a;
        a = transposed_conv2d(a, up2_.kernel.value);
        a = concat_channels(a, s2);
        for (std::size_t l = 0; l < 2; ++l) {
            a = conv_relu(dec2_[l], a, cache ? &cache->dec2[l] : nullptr);
        }

        if (cache) cache->up1_in = a;
        a = transposed_conv2d(a, up1_.kernel.value);
        a = concat_channels(a, s1);
        for (std::size_t l = 0; l < 2; ++l) {
            a = conv_relu(dec1_[l], a, cache ? &cache->dec1[l] : nullptr);
        }

        if (cache) cache->head.input = a;
        Tensor<T> logits = conv2d(a, head_.kernel.value, bias_span(head_), Padding::same);
        if (cache) cache->head.pre = logits;
        Tensor<T> prob = sigmoid(logits);
        if (cache) {
            cache->prob = prob;
            cache->valid = true;
        }
        return prob;
    }

    /// Accumulates d loss / d parameter into every Parameter.grad, given the
    /// loss gradient with respect to the forward output. Returns the loss
    /// gradient with respect to the input batch.
    Tensor<T> backward(const Tensor<T>& loss_grad, const StackNetCache<T>& cache) {
        if (!cache.valid) {
            throw StateError("backward requires a cached forward pass on the same batch");
        }
        if (!loss_grad.same_shape(cache.prob)) {
            throw DimensionError("backward: loss gradient " + loss_grad.shape_str() +
                                 " does not match forward output " + cache.prob.shape_str());
        }
        const auto& cw = cfg_.channel_widths;

        Tensor<T> g = sigmoid_adjoint(cache.prob, loss_grad);
        g = conv_unit_backward(head_, cache.head, g, /*with_relu=*/false);

        g = conv_unit_backward(dec1_[1], cache.dec1[1], g, true);
        g = conv_unit_backward(dec1_[0], cache.dec1[0], g, true);
        auto [gu1, gs1] = split_channels(g, cw[0], cw[0]);
        g = tconv_backward(up1_, cache.up1_in, gu1);

        g = conv_unit_backward(dec2_[1], cache.dec2[1], g, true);
        g = conv_unit_backward(dec2_[0], cache.dec2[0], g, true);
        auto [gu2, gs2] = split_channels(g, cw[1], cw[1]);
        g = tconv_backward(up2_, cache.up2_in, gu2);

        g = conv_unit_backward(dec3_[1], cache.dec3[1], g, true);
        g = conv_unit_backward(dec3_[0], cache.dec3[0], g, true);
        auto [gu3, gs3] = split_channels(g, cw[2], cw[2]);
        g = tconv_backward(up3_, cache.up3_in, gu3);

        g = conv_unit_backward(bottleneck_[1], cache.bottleneck[1], g, true);
        g = conv_unit_backward(bottleneck_[0], cache.bottleneck[0], g, true);

        g = unpool(cache.pool3, g);
        add_inplace(g, gs3);
        g = conv_unit_backward(stage3_[1], cache.stage3[1], g, true);
        g = conv_unit_backward(stage3_[0], cache.stage3[0], g, true);

        g = unpool(cache.pool2, g);
        add_inplace(g, gs2);
        for (std::size_t l = stack2_.size(); l-- > 0;) {
            g = conv_unit_backward(stack2_[l], cache.stack2[l], g, true);
        }

        g = unpool(cache.pool1, g);
        add_inplace(g, gs1);
        for (std::size_t l = stack1_.size(); l-- > 0;) {
            g = conv_unit_backward(stack1_[l], cache.stack1[l], g, true);
        }
        return g;
    }

    /// All trainable parameters in topology order (kernel then bias per
    /// convolution; transposed convolutions carry no bias). Also the
    /// checkpoint serialization order.
    std::vector<Parameter<T>*> params() {
        std::vector<Parameter<T>*> out;
        auto add_unit = [&out](ConvUnit& u) {
            out.push_back(&u.kernel);
            out.push_back(&u.bias);
        };
        for (auto& u : stack1_) add_unit(u);
        for (auto& u : stack2_) add_unit(u);
        for (auto& u : stage3_) add_unit(u);
        for (auto& u : bottleneck_) add_unit(u);
        out.push_back(&up3_.kernel);
        for (auto& u : dec3_) add_unit(u);
        out.push_back(&up2_.kernel);
        for (auto& u : dec2_) add_unit(u);
        out.push_back(&up1_.kernel);
        for (auto& u : dec1_) add_unit(u);
        add_unit(head_);
        return out;
    }

    void zero_grads() {
        for (Parameter<T>* p : params()) p->zero_grad();
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (Parameter<T>* p : params()) n += p->value.numel();
        return n;
    }

    // -- checkpoint I/O ------------------------------------------------

    /// Little-endian binary: "SNET" magic, format version, config, then
    /// parameter tensors in topology order as 32-bit floats.
    void save(std::ostream& os) {
        std::vector<std::uint8_t> buf;
        buf.insert(buf.end(), {'S', 'N', 'E', 'T'});
        append_le<std::uint32_t>(buf, kFormatVersion);
        append_le<std::int32_t>(buf, cfg_.kernel_r);
        append_le<std::int32_t>(buf, cfg_.stack_depth_L);
        append_le<std::int32_t>(buf, cfg_.in_channels);
        for (int wdt : cfg_.channel_widths) append_le<std::int32_t>(buf, wdt);
        append_le<std::int32_t>(buf, cfg_.input_h);
        append_le<std::int32_t>(buf, cfg_.input_w);
        append_le<std::uint64_t>(buf, cfg_.seed);
        for (Parameter<T>* p : params()) {
            for (T v : p->value.data) append_le<float>(buf, static_cast<float>(v));
        }
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size()));
        if (!os) throw IoError("failed to write checkpoint stream");
    }

    static StackNet<T> load(std::istream& is) {
        std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)),
                                      std::istreambuf_iterator<char>());
        const std::size_t header = 4 + 4 + 9 * 4 + 8;
        if (buf.size() < header) {
            throw ParseError("header", buf.size(), "checkpoint truncated");
        }
        if (buf[0] != 'S' || buf[1] != 'N' || buf[2] != 'E' || buf[3] != 'T') {
            throw ParseError("magic", 0, "expected \"SNET\"");
        }
        const auto version = read_le<std::uint32_t>(buf.data() + 4);
        if (version != kFormatVersion) {
            throw ParseError("version", 4, "unsupported format version " +
                                               std::to_string(version));
        }
        StackNetConfig cfg;
        std::size_t at = 8;
        auto next_i32 = [&] {
            const auto v = read_le<std::int32_t>(buf.data() + at);
            at += 4;
            return v;
        };
        cfg.kernel_r = next_i32();
        cfg.stack_depth_L = next_i32();
        cfg.in_channels = next_i32();
        for (int& wdt : cfg.channel_widths) wdt = next_i32();
        cfg.input_h = next_i32();
        cfg.input_w = next_i32();
        cfg.seed = read_le<std::uint64_t>(buf.data() + at);
        at += 8;
        try {
            cfg.validate();
        } catch (const ConfigError& e) {
            throw ParseError("config", 8, e.what());
        }

        StackNet<T> model(cfg);
        std::size_t expected = 0;
        for (Parameter<T>* p : model.params()) {
            expected += static_cast<std::size_t>(p->value.numel()) * 4;
        }
        if (buf.size() != at + expected) {
            throw ParseError("param data", at,
                             "expected " + std::to_string(expected) + " bytes of float32, got " +
                                 std::to_string(buf.size() - at));
        }
        for (Parameter<T>* p : model.params()) {
            for (T& v : p->value.data) {
                v = static_cast<T>(read_le<float>(buf.data() + at));
                at += 4;
            }
        }
        return model;
    }

    void save_file(const std::string& path) {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw IoError("cannot open checkpoint for writing: " + path);
        save(os);
    }

    static StackNet<T> load_file(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw IoError("cannot open checkpoint: " + path);
        return load(is);
    }

private:
    static constexpr std::uint32_t kFormatVersion = 1;

    struct ConvUnit {
        Parameter<T> kernel; ///< (outC, inC, r, r)
        Parameter<T> bias;   ///< (1, outC, 1, 1)
    };
    struct UpUnit {
        Parameter<T> kernel; ///< (inC, outC, 2, 2)
    };

    StackNetConfig cfg_;
    std::vector<ConvUnit> stack1_, stack2_;
    std::array<ConvUnit, 2> stage3_, bottleneck_, dec3_, dec2_, dec1_;
    UpUnit up3_, up2_, up1_;
    ConvUnit head_;

    static std::span<const T> bias_span(const ConvUnit& u) {
        return {u.bias.value.data.data(), u.bias.value.data.size()};
    }

    void build() {
        const auto& cw = cfg_.channel_widths;
        const int r = cfg_.kernel_r;
        const int L = cfg_.stack_depth_L;

        stack1_.clear();
        stack2_.clear();
        for (int l = 0; l < L; ++l) {
            stack1_.push_back(make_conv(l == 0 ? cfg_.in_channels : cw[0], cw[0], r));
            stack2_.push_back(make_conv(l == 0 ? cw[0] : cw[1], cw[1], r));
        }
        stage3_ = {make_conv(cw[1], cw[2], 3), make_conv(cw[2], cw[2], 3)};
        bottleneck_ = {make_conv(cw[2], cw[3], 3), make_conv(cw[3], cw[3], 3)};
        up3_ = make_up(cw[3], cw[2]);
        dec3_ = {make_conv(2 * cw[2], cw[2], 3), make_conv(cw[2], cw[2], 3)};
        up2_ = make_up(cw[2], cw[1]);
        dec2_ = {make_conv(2 * cw[1], cw[1], 3), make_conv(cw[1], cw[1], 3)};
        up1_ = make_up(cw[1], cw[0]);
        dec1_ = {make_conv(2 * cw[0], cw[0], 3), make_conv(cw[0], cw[0], 3)};
        head_ = make_conv(cw[0], 1, 1);

        // He fan-in initialization for every kernel, biases zero, one
        // deterministic stream in topology order.
        Rng rng(cfg_.seed);
        auto init_kernel = [&rng](Parameter<T>& k) {
            const double fan_in = static_cast<double>(k.value.c * k.value.h * k.value.w);
            const double sd = std::sqrt(2.0 / fan_in);
            for (T& v : k.value.data) v = static_cast<T>(rng.normal(0.0, sd));
        };
        for (auto& u : stack1_) init_kernel(u.kernel);
        for (auto& u : stack2_) init_kernel(u.kernel);
        for (auto& u : stage3_) init_kernel(u.kernel);
        for (auto& u : bottleneck_) init_kernel(u.kernel);
        init_kernel(up3_.kernel);
        for (auto& u : dec3_) init_kernel(u.kernel);
        init_kernel(up2_.kernel);
        for (auto& u : dec2_) init_kernel(u.kernel);
        init_kernel(up1_.kernel);
        for (auto& u : dec1_) init_kernel(u.kernel);
        init_kernel(head_.kernel);
    }

    ConvUnit make_conv(int in_c, int out_c, int r) const {
        ConvUnit u;
        u.kernel = Parameter<T>(Tensor<T>(out_c, in_c, r, r));
        u.bias = Parameter<T>(Tensor<T>(1, out_c, 1, 1));
        return u;
    }

    UpUnit make_up(int in_c, int out_c) const {
        UpUnit u;
        u.kernel = Parameter<T>(Tensor<T>(in_c, out_c, 2, 2));
        return u;
    }

    Tensor<T> conv_relu(const ConvUnit& u, const Tensor<T>& x,
                        typename StackNetCache<T>::ConvTrace* trace) const {
        Tensor<T> pre = conv2d(x, u.kernel.value, bias_span(u), Padding::same);
        Tensor<T> out = relu(pre);
        if (trace) {
            trace->input = x;
            trace->pre = std::move(pre);
        }
        return out;
    }

    Tensor<T> pool(const Tensor<T>& x, typename StackNetCache<T>::PoolTrace* trace) const {
        PoolResult<T> res = maxpool2x2(x);
        if (trace) {
            trace->argmax = std::move(res.argmax);
            trace->n = x.n;
            trace->c = x.c;
            trace->h = x.h;
            trace->w = x.w;
        }
        return std::move(res.output);
    }

    static Tensor<T> unpool(const typename StackNetCache<T>::PoolTrace& trace,
                            const Tensor<T>& g) {
        return maxpool2x2_adjoint(trace.argmax, trace.n, trace.c, trace.h, trace.w, g);
    }

    Tensor<T> conv_unit_backward(ConvUnit& u, const typename StackNetCache<T>::ConvTrace& t,
                                 const Tensor<T>& grad, bool with_relu) {
        Tensor<T> g = with_relu ? relu_adjoint(t.pre, grad) : grad;
        ConvGrads<T> cg = conv2d_adjoint(t.input, u.kernel.value, g, Padding::same);
        add_inplace(u.kernel.grad, cg.kernel);
        for (std::size_t i = 0; i < cg.bias.size(); ++i) u.bias.grad.data[i] += cg.bias[i];
        return std::move(cg.input);
    }

    Tensor<T> tconv_backward(UpUnit& u, const Tensor<T>& input, const Tensor<T>& grad) {
        TConvGrads<T> tg = transposed_conv2d_adjoint(input, u.kernel.value, grad);
        add_inplace(u.kernel.grad, tg.kernel);
        return std::move(tg.input);
    }

    static void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
        if (!dst.same_shape(src)) {
            throw DimensionError("add_inplace: " + dst.shape_str() + " vs " + src.shape_str());
        }
        for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
    }
};

using StackNetF = StackNet<float>;
using StackNetD = StackNet<double>;

} // namespace stacknet

#endif // STACKNET_MODEL_HPP
