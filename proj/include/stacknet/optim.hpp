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

#ifndef STACKNET_OPTIM_HPP
#define STACKNET_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "stacknet/errors.hpp"
#include "stacknet/tensor.hpp"

namespace stacknet {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Moment buffers match
/// parameter shapes and start at zero.
template <typename T>
class Adam {
public:
    explicit Adam(std::vector<Parameter<T>*> params, AdamConfig cfg = {})
        : params_(std::move(params)), cfg_(cfg) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (Parameter<T>* p : params_) {
            m_.emplace_back(p->value.data.size(), T(0));
            v_.emplace_back(p->value.data.size(), T(0));
        }
    }

    std::int64_t step_count() const { return t_; }

    /// One update from the gradients currently held in Parameter.grad.
    void step(double lr) {
        if (lr <= 0.0) throw ConfigError("adam: learning rate must be positive");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            Parameter<T>* p = params_[k];
            std::vector<T>& m = m_[k];
            std::vector<T>& v = v_[k];
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double g = static_cast<double>(p->grad.data[i]);
                const double mi = cfg_.beta1 * static_cast<double>(m[i]) +
                                  (1.0 - cfg_.beta1) * g;
                const double vi = cfg_.beta2 * static_cast<double>(v[i]) +
                                  (1.0 - cfg_.beta2) * g * g;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                const double mhat = mi / bc1;
                const double vhat = vi / bc2;
                p->value.data[i] = static_cast<T>(
                    static_cast<double>(p->value.data[i]) -
                    lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
        }
    }

private:
    std::vector<Parameter<T>*> params_;
    AdamConfig cfg_;
    std::vector<std::vector<T>> m_, v_;
    std::int64_t t_ = 0;
};

} // namespace stacknet

#endif // STACKNET_OPTIM_HPP
