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

#ifndef STACKNET_METRICS_HPP
#define STACKNET_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stacknet/volume.hpp"

namespace stacknet {

enum class Connectivity : int { c6 = 6, c18 = 18, c26 = 26 };

/// Labeling of a binary mask into 3-D connected components. Labels are
/// 1..count in first-visited raster-scan order; 0 is background.
struct LesionComponents {
    std::int64_t nx = 0, ny = 0, nz = 0;
    std::vector<std::int32_t> labels;
    int count = 0;
    std::vector<std::int64_t> voxel_counts; ///< indexed by label-1
    Connectivity connectivity = Connectivity::c26;
};

/// 2|G n P| / (|G| + |P|); defined as 1 when both masks are empty.
double dice_score(const Volume& g, const Volume& p);

LesionComponents label_components_3d(const Volume& mask,
                                     Connectivity connectivity = Connectivity::c26);

/// Fraction of ground-truth components sharing at least one voxel with any
/// predicted component.
double lesion_recall(const LesionComponents& g_comps, const LesionComponents& p_comps);

/// paper_literal: detected predicted components / all predicted components
/// (requires a non-empty prediction). harmonic: 2*prec*rec/(prec+rec).
enum class F1Mode { paper_literal, harmonic };

double lesion_f1(const LesionComponents& g_comps, const LesionComponents& p_comps,
                 F1Mode mode = F1Mode::paper_literal);

/// small: v < 10 voxels, medium: 10 <= v <= 20, large: v > 20.
struct SizeHistogram {
    std::int64_t small = 0;
    std::int64_t medium = 0;
    std::int64_t large = 0;

    std::int64_t total() const { return small + medium + large; }
};

SizeHistogram size_histogram(const LesionComponents& comps);

/// Metrics for one (ground truth, prediction) volume pair.
struct MetricsReport {
    double dice = 0.0;
    double lesion_recall = 0.0;
    std::optional<double> lesion_f1; ///< absent when undefined (empty prediction)
    std::int64_t n_g = 0;            ///< ground-truth components
    std::int64_t n_p = 0;            ///< detected ground-truth components
    std::int64_t n_f = 0;            ///< predicted components with no overlap
    SizeHistogram sizes;             ///< detected ground-truth lesions by size
    SizeHistogram gt_sizes;          ///< all ground-truth lesions by size
};

MetricsReport evaluate_pair(const Volume& gt, const Volume& pred,
                            Connectivity connectivity = Connectivity::c26,
                            F1Mode f1_mode = F1Mode::paper_literal);

/// Serialized with stable field names: dice, lesion_recall, lesion_f1,
/// n_g, n_p, n_f, sizes{small,medium,large}, gt_sizes{...}.
std::string metrics_report_json(const MetricsReport& report);
void write_metrics_json(const MetricsReport& report, const std::string& path);
MetricsReport parse_metrics_json(const std::string& text);

struct ZTestResult {
    double z = 0.0;
    double p_two_sided = 0.0;
};

/// Paired Z-test on a - b with sample standard deviation (n-1) and the
/// two-sided normal p-value.
ZTestResult paired_z_test(std::span<const double> a, std::span<const double> b);

} // namespace stacknet

#endif // STACKNET_METRICS_HPP
