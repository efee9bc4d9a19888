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

#ifndef STACKNET_GRAD_CHECK_HPP
#define STACKNET_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stacknet/tensor.hpp"

namespace stacknet {

/// One differentiable argument under test: the live values (perturbed in
/// place during the check) and the analytic gradient claimed for them.
struct FlatParamView {
    double* value = nullptr;
    const double* analytic_grad = nullptr;
    std::size_t count = 0;
    std::string name;
};

inline FlatParamView view_of(Tensord& value, const Tensord& grad, std::string name) {
    return {value.data.data(), grad.data.data(), value.data.size(), std::move(name)};
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t elements_checked = 0;
    std::string worst_element;

    bool passed(double tol) const { return max_rel_err < tol; }
};

/// Compares analytic gradients against central finite differences of a
/// scalar-valued function, element by element, in 64-bit. The relative
/// error uses a unit floor so near-zero gradients are compared absolutely:
/// err = |a - n| / max(1, |a|, |n|).
inline GradCheckReport finite_diff_check(const std::function<double()>& scalar_fn,
                                         std::span<FlatParamView> views,
                                         double step = 1e-5) {
    GradCheckReport report;
    for (FlatParamView& v : views) {
        for (std::size_t i = 0; i < v.count; ++i) {
            const double saved = v.value[i];
            v.value[i] = saved + step;
            const double fp = scalar_fn();
            v.value[i] = saved - step;
            const double fm = scalar_fn();
            v.value[i] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            const double analytic = v.analytic_grad[i];
            const double denom =
                std::max({1.0, std::abs(analytic), std::abs(numeric)});
            const double err = std::abs(analytic - numeric) / denom;
            if (err > report.max_rel_err) {
                report.max_rel_err = err;
                report.worst_element = v.name + "[" + std::to_string(i) + "]";
            }
            ++report.elements_checked;
        }
    }
    return report;
}

} // namespace stacknet

#endif // STACKNET_GRAD_CHECK_HPP
