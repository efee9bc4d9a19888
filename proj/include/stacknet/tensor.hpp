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

#ifndef STACKNET_TENSOR_HPP
#define STACKNET_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "stacknet/errors.hpp"

namespace stacknet {

/// Dense 4-D array in (batch, channel, height, width) order, W fastest.
/// float for training, double for gradient verification.
template <typename T>
struct Tensor {
    std::int64_t n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;

    Tensor(std::int64_t n_, std::int64_t c_, std::int64_t h_, std::int64_t w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0) {
            throw DimensionError("tensor extents must be non-negative");
        }
        data.assign(static_cast<std::size_t>(numel()), fill);
    }

    std::int64_t numel() const { return n * c * h * w; }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }

    T& at(std::int64_t in, std::int64_t ic, std::int64_t iy, std::int64_t ix) {
        return data[static_cast<std::size_t>(((in * c + ic) * h + iy) * w + ix)];
    }
    const T& at(std::int64_t in, std::int64_t ic, std::int64_t iy, std::int64_t ix) const {
        return data[static_cast<std::size_t>(((in * c + ic) * h + iy) * w + ix)];
    }

    /// Pointer to the contiguous (h*w) plane of batch item `in`, channel `ic`.
    T* plane(std::int64_t in, std::int64_t ic) {
        return data.data() + static_cast<std::size_t>((in * c + ic) * h * w);
    }
    const T* plane(std::int64_t in, std::int64_t ic) const {
        return data.data() + static_cast<std::size_t>((in * c + ic) * h * w);
    }

    void fill(T v) { data.assign(data.size(), v); }

    /// Shape-preserving element type conversion.
    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(n, c, h, w);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

/// Trainable tensor plus its accumulated gradient. grad always has the
/// same shape as value and starts at zero.
template <typename T>
struct Parameter {
    Tensor<T> value;
    Tensor<T> grad;

    Parameter() = default;
    explicit Parameter(Tensor<T> v) : value(std::move(v)) {
        grad = Tensor<T>(value.n, value.c, value.h, value.w);
    }

    void zero_grad() { grad.fill(T(0)); }
};

} // namespace stacknet

#endif // STACKNET_TENSOR_HPP
