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

#include "stacknet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "stacknet/errors.hpp"

namespace stacknet {

namespace {

/// Neighbor offsets for the requested connectivity: 6 = faces,
/// 18 = faces + edges, 26 = full cube.
std::vector<std::array<int, 3>> neighbor_offsets(Connectivity conn) {
    std::vector<std::array<int, 3>> offs;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) continue;
                if (conn == Connectivity::c6 && manhattan > 1) continue;
                if (conn == Connectivity::c18 && manhattan > 2) continue;
                offs.push_back({dx, dy, dz});
            }
        }
    }
    return offs;
}

} // namespace

double dice_score(const Volume& g, const Volume& p) {
    if (!g.same_dims(p)) {
        throw DimensionError("dice_score: " + g.dims_str() + " vs " + p.dims_str());
    }
    g.check_binary("dice_score (ground truth)");
    p.check_binary("dice_score (prediction)");
    std::int64_t inter = 0, size_g = 0, size_p = 0;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const bool gv = g.data[i] != 0.0f;
        const bool pv = p.data[i] != 0.0f;
        inter += (gv && pv);
        size_g += gv;
        size_p += pv;
    }
    if (size_g + size_p == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(size_g + size_p);
}

LesionComponents label_components_3d(const Volume& mask, Connectivity connectivity) {
    mask.check_binary("label_components_3d");
    LesionComponents out;
    out.nx = mask.nx;
    out.ny = mask.ny;
    out.nz = mask.nz;
    out.connectivity = connectivity;
    out.labels.assign(mask.data.size(), 0);

    const auto offs = neighbor_offsets(connectivity);
    std::vector<std::int64_t> stack;

    // Raster scan (x fastest) so label order is deterministic.
    for (std::int64_t z = 0; z < mask.nz; ++z) {
        for (std::int64_t y = 0; y < mask.ny; ++y) {
            for (std::int64_t x = 0; x < mask.nx; ++x) {
                const std::int64_t i = x + mask.nx * (y + mask.ny * z);
                if (mask.data[static_cast<std::size_t>(i)] == 0.0f ||
                    out.labels[static_cast<std::size_t>(i)] != 0) {
                    continue;
                }
                const std::int32_t label = ++out.count;
                std::int64_t voxels = 0;
                stack.clear();
                stack.push_back(i);
                out.labels[static_cast<std::size_t>(i)] = label;
                while (!stack.empty()) {
                    const std::int64_t cur = stack.back();
                    stack.pop_back();
                    ++voxels;
                    const std::int64_t cx = cur % mask.nx;
                    const std::int64_t cy = (cur / mask.nx) % mask.ny;
                    const std::int64_t cz = cur / (mask.nx * mask.ny);
                    for (const auto& d : offs) {
                        const std::int64_t nx2 = cx + d[0], ny2 = cy + d[1], nz2 = cz + d[2];
                        if (nx2 < 0 || nx2 >= mask.nx || ny2 < 0 || ny2 >= mask.ny ||
                            nz2 < 0 || nz2 >= mask.nz) {
                            continue;
                        }
                        const std::int64_t ni = nx2 + mask.nx * (ny2 + mask.ny * nz2);
                        if (mask.data[static_cast<std::size_t>(ni)] != 0.0f &&
                            out.labels[static_cast<std::size_t>(ni)] == 0) {
                            out.labels[static_cast<std::size_t>(ni)] = label;
                            stack.push_back(ni);
                        }
                    }
                }
                out.voxel_counts.push_back(voxels);
            }
        }
    }
    return out;
}

namespace {

struct OverlapCounts {
    std::vector<std::uint8_t> g_hit; ///< per GT component: overlaps any prediction
    std::vector<std::uint8_t> p_hit; ///< per predicted component: overlaps any GT
};

OverlapCounts overlap(const LesionComponents& g, const LesionComponents& p) {
    if (g.nx != p.nx || g.ny != p.ny || g.nz != p.nz) {
        throw DimensionError("lesion metrics: component grids disagree on dims");
    }
    OverlapCounts oc;
    oc.g_hit.assign(static_cast<std::size_t>(g.count), 0);
    oc.p_hit.assign(static_cast<std::size_t>(p.count), 0);
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
        const std::int32_t gl = g.labels[i];
        const std::int32_t pl = p.labels[i];
        if (gl != 0 && pl != 0) {
            oc.g_hit[static_cast<std::size_t>(gl - 1)] = 1;
            oc.p_hit[static_cast<std::size_t>(pl - 1)] = 1;
        }
    }
    return oc;
}

std::int64_t count_set(const std::vector<std::uint8_t>& v) {
    std::int64_t n = 0;
    for (std::uint8_t x : v) n += x;
    return n;
}

} // namespace

double lesion_recall(const LesionComponents& g_comps, const LesionComponents& p_comps) {
    if (g_comps.count == 0) {
        throw UndefinedMetricError("lesion_recall: ground truth has no components");
    }
    const OverlapCounts oc = overlap(g_comps, p_comps);
    return static_cast<double>(count_set(oc.g_hit)) / static_cast<double>(g_comps.count);
}

double lesion_f1(const LesionComponents& g_comps, const LesionComponents& p_comps,
                 F1Mode mode) {
    const OverlapCounts oc = overlap(g_comps, p_comps);
    const std::int64_t p_detected = count_set(oc.p_hit);
    const std::int64_t p_false = p_comps.count - p_detected;

    if (mode == F1Mode::paper_literal) {
        if (p_comps.count == 0) {
            throw UndefinedMetricError("lesion_f1: prediction has no components");
        }
        return static_cast<double>(p_detected) /
               static_cast<double>(p_detected + p_false);
    }

    if (g_comps.count == 0) {
        throw UndefinedMetricError("lesion_f1: ground truth has no components");
    }
    const double recall =
        static_cast<double>(count_set(oc.g_hit)) / static_cast<double>(g_comps.count);
    const double precision = p_comps.count == 0
                                 ? 0.0
                                 : static_cast<double>(p_detected) /
                                       static_cast<double>(p_comps.count);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

SizeHistogram size_histogram(const LesionComponents& comps) {
    SizeHistogram h;
    for (std::int64_t v : comps.voxel_counts) {
        if (v < 10) {
            ++h.small;
        } else if (v <= 20) {
            ++h.medium;
        } else {
            ++h.large;
        }
    }
    return h;
}

MetricsReport evaluate_pair(const Volume& gt, const Volume& pred, Connectivity connectivity,
                            F1Mode f1_mode) {
    MetricsReport rep;
    rep.dice = dice_score(gt, pred);
    const LesionComponents gc = label_components_3d(gt, connectivity);
    const LesionComponents pc = label_components_3d(pred, connectivity);
    const OverlapCounts oc = overlap(gc, pc);

    rep.n_g = gc.count;
    rep.n_p = count_set(oc.g_hit);
    rep.n_f = pc.count - count_set(oc.p_hit);
    rep.lesion_recall = lesion_recall(gc, pc);
    try {
        rep.lesion_f1 = lesion_f1(gc, pc, f1_mode);
    } catch (const UndefinedMetricError&) {
        rep.lesion_f1 = std::nullopt;
    }
    rep.gt_sizes = size_histogram(gc);
    for (std::size_t k = 0; k < oc.g_hit.size(); ++k) {
        if (!oc.g_hit[k]) continue;
        const std::int64_t v = gc.voxel_counts[k];
        if (v < 10) {
            ++rep.sizes.small;
        } else if (v <= 20) {
            ++rep.sizes.medium;
        } else {
            ++rep.sizes.large;
        }
    }
    return rep;
}

namespace {

nlohmann::json histogram_json(const SizeHistogram& h) {
    return {{"small", h.small}, {"medium", h.medium}, {"large", h.large}};
}

SizeHistogram histogram_from_json(const nlohmann::json& j) {
    SizeHistogram h;
    h.small = j.at("small").get<std::int64_t>();
    h.medium = j.at("medium").get<std::int64_t>();
    h.large = j.at("large").get<std::int64_t>();
    return h;
}

} // namespace

std::string metrics_report_json(const MetricsReport& report) {
    nlohmann::json doc{{"dice", report.dice},
                       {"lesion_recall", report.lesion_recall},
                       {"n_g", report.n_g},
                       {"n_p", report.n_p},
                       {"n_f", report.n_f},
                       {"sizes", histogram_json(report.sizes)},
                       {"gt_sizes", histogram_json(report.gt_sizes)}};
    if (report.lesion_f1) {
        doc["lesion_f1"] = *report.lesion_f1;
    } else {
        doc["lesion_f1"] = nullptr;
    }
    return doc.dump(2);
}

void write_metrics_json(const MetricsReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open metrics report for writing: " + path);
    os << metrics_report_json(report) << "\n";
    if (!os) throw IoError("failed writing metrics report: " + path);
}

MetricsReport parse_metrics_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
        MetricsReport rep;
        rep.dice = doc.at("dice").get<double>();
        rep.lesion_recall = doc.at("lesion_recall").get<double>();
        if (!doc.at("lesion_f1").is_null()) {
            rep.lesion_f1 = doc["lesion_f1"].get<double>();
        }
        rep.n_g = doc.at("n_g").get<std::int64_t>();
        rep.n_p = doc.at("n_p").get<std::int64_t>();
        rep.n_f = doc.at("n_f").get<std::int64_t>();
        rep.sizes = histogram_from_json(doc.at("sizes"));
        rep.gt_sizes = histogram_from_json(doc.at("gt_sizes"));
        return rep;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("metrics report", 0, e.what());
    }
}

ZTestResult paired_z_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("paired_z_test: sample lists differ in length");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw DegenerateInputError("paired_z_test: need at least 2 pairs, got " +
                                   std::to_string(n));
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        throw DegenerateInputError("paired_z_test: differences have zero variance");
    }
    ZTestResult res;
    res.z = mean / (sd / std::sqrt(static_cast<double>(n)));
    // p = 2*(1 - Phi(|z|)) = erfc(|z|/sqrt(2))
    res.p_two_sided = std::erfc(std::abs(res.z) / std::sqrt(2.0));
    return res;
}

} // namespace stacknet
