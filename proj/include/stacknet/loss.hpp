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

#ifndef STACKNET_LOSS_HPP
#define STACKNET_LOSS_HPP

#include <cstdint>

#include "stacknet/errors.hpp"
#include "stacknet/tensor.hpp"

namespace stacknet {

/// Denominator form of the soft Dice loss. `squared` sums p^2 + g^2 (the
/// V-Net formulation), `plain` sums p + g.
enum class DiceVariant { squared, plain };

template <typename T>
struct DiceLossResult {
    double loss = 0.0;
    double dice = 0.0;
    Tensor<T> grad_pred; ///< exact analytic d loss / d pred
};

/// loss = 1 - (2*sum(p*g) + s) / (sum(p^2) + sum(g^2) + s), summed over the
/// whole batch. Targets must be exactly 0 or 1.
template <typename T>
DiceLossResult<T> soft_dice_loss(const Tensor<T>& pred, const Tensor<T>& target,
                                 double smooth = 1.0,
                                 DiceVariant variant = DiceVariant::squared) {
    if (!pred.same_shape(target)) {
        throw DimensionError("soft_dice_loss: " + pred.shape_str() + " vs " +
                             target.shape_str());
    }
    if (smooth < 0.0) throw ConfigError("soft_dice_loss: smooth must be >= 0");
    for (T g : target.data) {
        if (g != T(0) && g != T(1)) {
            throw ValueError("soft_dice_loss: target values must be exactly 0 or 1");
        }
    }

    double sum_pg = 0.0, sum_p2 = 0.0, sum_g2 = 0.0, sum_p = 0.0, sum_g = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double p = static_cast<double>(pred.data[i]);
        const double g = static_cast<double>(target.data[i]);
        sum_pg += p * g;
        sum_p2 += p * p;
        sum_g2 += g * g;
        sum_p += p;
        sum_g += g;
    }

    const double num = 2.0 * sum_pg + smooth;
    const double den = (variant == DiceVariant::squared ? sum_p2 + sum_g2 : sum_p + sum_g) +
                       smooth;
    if (den == 0.0) {
        throw DegenerateInputError("soft_dice_loss: zero denominator (empty tensors with "
                                   "smooth = 0)");
    }

    DiceLossResult<T> res;
    res.dice = num / den;
    res.loss = 1.0 - res.dice;
    res.grad_pred = Tensor<T>(pred.n, pred.c, pred.h, pred.w);
    const double inv_den2 = 1.0 / (den * den);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double p = static_cast<double>(pred.data[i]);
        const double g = static_cast<double>(target.data[i]);
        double d;
        if (variant == DiceVariant::squared) {
            // d/dp [1 - num/den] with d num = 2g, d den = 2p
            d = (2.0 * num * p - 2.0 * g * den) * inv_den2;
        } else {
            d = (num - 2.0 * g * den) * inv_den2;
        }
        res.grad_pred.data[i] = static_cast<T>(d);
    }
    return res;
}

} // namespace stacknet

#endif // STACKNET_LOSS_HPP
