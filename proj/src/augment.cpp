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

#include "stacknet/augment.hpp"

#include <array>
#include <cmath>

#include "stacknet/errors.hpp"

namespace stacknet {

namespace {

/// Row-major 2x2 matrix acting on (x, y).
using Mat2 = std::array<double, 4>;

Mat2 mat_mul(const Mat2& a, const Mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Mat2 mat_inv(const Mat2& m) {
    const double det = m[0] * m[3] - m[1] * m[2];
    if (det == 0.0) throw DegenerateInputError("augment: singular affine transform");
    return {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
}

/// Forward transform is rotation * shear * zoom; sampling uses its inverse
/// about the slice center.
Mat2 inverse_transform(const AugmentParams& p) {
    const double th = p.rotation_deg * M_PI / 180.0;
    const Mat2 rot{std::cos(th), -std::sin(th), std::sin(th), std::cos(th)};
    const Mat2 shear{1.0, p.shear, 0.0, 1.0};
    const Mat2 zoom{p.zoom, 0.0, 0.0, p.zoom};
    return mat_inv(mat_mul(mat_mul(rot, shear), zoom));
}

float bilinear_at(const float* plane, std::int64_t h, std::int64_t w, double sy, double sx) {
    const std::int64_t x0 = static_cast<std::int64_t>(std::floor(sx));
    const std::int64_t y0 = static_cast<std::int64_t>(std::floor(sy));
    const double fx = sx - static_cast<double>(x0);
    const double fy = sy - static_cast<double>(y0);
    auto at = [&](std::int64_t y, std::int64_t x) -> double {
        if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
        return static_cast<double>(plane[y * w + x]);
    };
    const double v = (1.0 - fy) * ((1.0 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                     fy * ((1.0 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
    return static_cast<float>(v);
}

float nearest_at(const float* plane, std::int64_t h, std::int64_t w, double sy, double sx) {
    const std::int64_t x = static_cast<std::int64_t>(std::floor(sx + 0.5));
    const std::int64_t y = static_cast<std::int64_t>(std::floor(sy + 0.5));
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0f;
    return plane[y * w + x];
}

} // namespace

AugmentParams draw_augment(Rng& rng, const AugmentRanges& ranges) {
    AugmentParams p;
    p.rotation_deg = rng.uniform(-ranges.max_rotation_deg, ranges.max_rotation_deg);
    p.shear = rng.uniform(-ranges.max_shear, ranges.max_shear);
    p.zoom = rng.uniform(ranges.zoom_lo, ranges.zoom_hi);
    return p;
}

std::pair<Tensorf, Tensorf> augment_sample(const Tensorf& image, const Tensorf& mask,
                                           const AugmentParams& params) {
    if (image.n != 1 || mask.n != 1 || mask.c != 1 || image.h != mask.h ||
        image.w != mask.w) {
        throw DimensionError("augment_sample: image " + image.shape_str() + " vs mask " +
                             mask.shape_str());
    }
    const Mat2 inv = inverse_transform(params);
    const double cx = static_cast<double>(image.w - 1) / 2.0;
    const double cy = static_cast<double>(image.h - 1) / 2.0;

    Tensorf img_out(1, image.c, image.h, image.w);
    Tensorf mask_out(1, 1, mask.h, mask.w);
    for (std::int64_t y = 0; y < image.h; ++y) {
        for (std::int64_t x = 0; x < image.w; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            const double sx = cx + inv[0] * dx + inv[1] * dy;
            const double sy = cy + inv[2] * dx + inv[3] * dy;
            for (std::int64_t c = 0; c < image.c; ++c) {
                img_out.at(0, c, y, x) =
                    bilinear_at(image.plane(0, c), image.h, image.w, sy, sx);
            }
            mask_out.at(0, 0, y, x) = nearest_at(mask.plane(0, 0), mask.h, mask.w, sy, sx);
        }
    }
    return {std::move(img_out), std::move(mask_out)};
}

std::pair<Tensorf, Tensorf> augment_sample(const Tensorf& image, const Tensorf& mask,
                                           Rng& rng, const AugmentRanges& ranges) {
    return augment_sample(image, mask, draw_augment(rng, ranges));
}

} // namespace stacknet
