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

#include "stacknet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "stacknet/errors.hpp"

namespace stacknet {

namespace {

/// Offset of processed pixel 0 within the original axis: crop start when
/// shrinking, minus the low-side pad when growing.
int axis_offset(std::int64_t dim, int target) {
    if (dim >= target) return static_cast<int>((dim - target) / 2);
    return -static_cast<int>((target - dim) / 2);
}

float sample_or_zero(const float* src, std::int64_t h, std::int64_t w, std::int64_t y,
                     std::int64_t x) {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0f;
    return src[y * w + x];
}

/// Otsu's threshold over a value list; returns the cut value. Foreground
/// is v > cut.
float otsu_threshold(const std::vector<float>& values) {
    float vmin = values[0], vmax = values[0];
    for (float v : values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (vmin == vmax) return std::nextafter(vmin, -1e30f); // single class: keep everything
    constexpr int kBins = 256;
    std::array<std::int64_t, kBins> hist{};
    const double scale = kBins / (static_cast<double>(vmax) - vmin);
    for (float v : values) {
        int b = static_cast<int>((static_cast<double>(v) - vmin) * scale);
        b = std::clamp(b, 0, kBins - 1);
        ++hist[static_cast<std::size_t>(b)];
    }
    const double total = static_cast<double>(values.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += b * static_cast<double>(hist[b]);

    double best_var = -1.0;
    int best_bin = 0;
    double w0 = 0.0, sum0 = 0.0;
    for (int b = 0; b < kBins - 1; ++b) {
        w0 += static_cast<double>(hist[b]);
        sum0 += b * static_cast<double>(hist[b]);
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {
            best_var = between;
            best_bin = b;
        }
    }
    // Upper edge of the winning bin.
    return static_cast<float>(vmin + (best_bin + 1) / (scale));
}

/// Marks background pixels 4-connected to the slice border; everything
/// else becomes foreground.
void fill_holes_slice(float* mask, std::int64_t nx, std::int64_t ny) {
    std::vector<std::uint8_t> reached(static_cast<std::size_t>(nx * ny), 0);
    std::deque<std::int64_t> queue;
    auto push = [&](std::int64_t x, std::int64_t y) {
        const std::int64_t i = y * nx + x;
        if (mask[i] == 0.0f && !reached[static_cast<std::size_t>(i)]) {
            reached[static_cast<std::size_t>(i)] = 1;
            queue.push_back(i);
        }
    };
    for (std::int64_t x = 0; x < nx; ++x) {
        push(x, 0);
        push(x, ny - 1);
    }
    for (std::int64_t y = 0; y < ny; ++y) {
        push(0, y);
        push(nx - 1, y);
    }
    while (!queue.empty()) {
        const std::int64_t i = queue.front();
        queue.pop_front();
        const std::int64_t x = i % nx, y = i / nx;
        if (x > 0) push(x - 1, y);
        if (x < nx - 1) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y < ny - 1) push(x, y + 1);
    }
    for (std::int64_t i = 0; i < nx * ny; ++i) {
        if (mask[i] == 0.0f && !reached[static_cast<std::size_t>(i)]) mask[i] = 1.0f;
    }
}

} // namespace

std::pair<Tensorf, std::array<int, 2>> crop_or_pad_slice(const Tensorf& slice, int target_h,
                                                         int target_w) {
    if (slice.n != 1 || slice.c != 1) {
        throw DimensionError("crop_or_pad_slice: expected a (1,1,H,W) slice, got " +
                             slice.shape_str());
    }
    if (target_h < 1 || target_w < 1) {
        throw ConfigError("crop_or_pad_slice: target dims must be positive");
    }
    const int off_y = axis_offset(slice.h, target_h);
    const int off_x = axis_offset(slice.w, target_w);
    Tensorf out(1, 1, target_h, target_w);
    const float* src = slice.data.data();
    for (std::int64_t y = 0; y < target_h; ++y) {
        for (std::int64_t x = 0; x < target_w; ++x) {
            out.at(0, 0, y, x) = sample_or_zero(src, slice.h, slice.w, y + off_y, x + off_x);
        }
    }
    return {std::move(out), {off_y, off_x}};
}

Volume crop_or_pad_volume(const Volume& vol, int target_h, int target_w, CropInfo* info) {
    if (target_h < 1 || target_w < 1) {
        throw ConfigError("crop_or_pad_volume: target dims must be positive");
    }
    const int off_y = axis_offset(vol.ny, target_h);
    const int off_x = axis_offset(vol.nx, target_w);
    Volume out(target_w, target_h, vol.nz, vol.kind);
    out.spacing = vol.spacing;
    for (std::int64_t z = 0; z < vol.nz; ++z) {
        const float* src = vol.slice(z);
        float* dst = out.slice(z);
        for (std::int64_t y = 0; y < target_h; ++y) {
            for (std::int64_t x = 0; x < target_w; ++x) {
                const std::int64_t sy = y + off_y, sx = x + off_x;
                dst[y * target_w + x] =
                    (sy >= 0 && sy < vol.ny && sx >= 0 && sx < vol.nx)
                        ? src[sy * vol.nx + sx]
                        : 0.0f;
            }
        }
    }
    if (info) {
        info->orig_nx = vol.nx;
        info->orig_ny = vol.ny;
        info->off_x = off_x;
        info->off_y = off_y;
    }
    return out;
}

Volume brain_mask(const Volume& flair, const BrainMaskOptions& opts) {
    if (flair.kind != VolumeKind::intensity) {
        throw ValueError("brain_mask: expected an intensity volume");
    }
    std::vector<float> nonzero;
    nonzero.reserve(flair.data.size());
    for (float v : flair.data) {
        if (v != 0.0f) nonzero.push_back(v);
    }
    if (nonzero.empty()) {
        throw EmptyMaskError("brain_mask: volume is all zero");
    }

    const float thr = opts.method == BrainMaskOptions::Method::otsu
                          ? otsu_threshold(nonzero)
                          : opts.fixed_threshold;

    Volume mask(flair.nx, flair.ny, flair.nz, VolumeKind::binary_mask);
    mask.spacing = flair.spacing;
    for (std::size_t i = 0; i < flair.data.size(); ++i) {
        mask.data[i] = flair.data[i] > thr ? 1.0f : 0.0f;
    }
    for (std::int64_t z = 0; z < mask.nz; ++z) {
        fill_holes_slice(mask.slice(z), mask.nx, mask.ny);
    }
    if (mask.count_nonzero() == 0) {
        throw EmptyMaskError("brain_mask: thresholding produced an empty mask");
    }
    return mask;
}

Volume gaussian_normalize(const Volume& vol, const Volume& mask) {
    if (!vol.same_dims(mask)) {
        throw DimensionError("gaussian_normalize: volume " + vol.dims_str() +
                             " vs mask " + mask.dims_str());
    }
    mask.check_binary("gaussian_normalize");

    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        if (mask.data[i] != 0.0f) {
            sum += static_cast<double>(vol.data[i]);
            ++n;
        }
    }
    if (n == 0) {
        throw DegenerateInputError("gaussian_normalize: mask is empty");
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        if (mask.data[i] != 0.0f) {
            const double d = static_cast<double>(vol.data[i]) - mean;
            ss += d * d;
        }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd <= 1e-8) {
        throw DegenerateInputError(
            "gaussian_normalize: within-mask std is degenerate (constant volume)");
    }

    Volume out(vol.nx, vol.ny, vol.nz, VolumeKind::intensity);
    out.spacing = vol.spacing;
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        out.data[i] = mask.data[i] != 0.0f
                          ? static_cast<float>((static_cast<double>(vol.data[i]) - mean) / sd)
                          : 0.0f;
    }
    return out;
}

void preprocess_subject(SubjectRecord& record, const PreprocessOptions& opts) {
    if (!record.flair.same_dims(record.t1) ||
        (record.gt_mask && !record.flair.same_dims(*record.gt_mask))) {
        throw DimensionError("preprocess_subject: subject volumes disagree on dims");
    }
    Volume flair = crop_or_pad_volume(record.flair, opts.target_h, opts.target_w,
                                      &record.crop);
    Volume t1 = crop_or_pad_volume(record.t1, opts.target_h, opts.target_w, nullptr);
    if (record.gt_mask) {
        record.gt_mask_proc =
            crop_or_pad_volume(*record.gt_mask, opts.target_h, opts.target_w, nullptr);
    }
    record.brain_mask = brain_mask(flair, opts.mask);
    record.flair = gaussian_normalize(flair, record.brain_mask);
    record.t1 = gaussian_normalize(t1, record.brain_mask);
    record.preprocessed = true;
}

Tensorf stack_modalities(const SubjectRecord& record) {
    if (!record.preprocessed) {
        throw StateError("stack_modalities: subject has not been preprocessed");
    }
    const Volume& fl = record.flair;
    const Volume& t1 = record.t1;
    if (!fl.same_dims(t1)) {
        throw DimensionError("stack_modalities: FLAIR " + fl.dims_str() + " vs T1 " +
                             t1.dims_str());
    }
    Tensorf batch(fl.nz, 2, fl.ny, fl.nx);
    const std::size_t plane = static_cast<std::size_t>(fl.nx * fl.ny);
    for (std::int64_t z = 0; z < fl.nz; ++z) {
        std::copy_n(fl.slice(z), plane, batch.plane(z, 0));
        std::copy_n(t1.slice(z), plane, batch.plane(z, 1));
    }
    return batch;
}

Tensorf gt_slices(const SubjectRecord& record) {
    if (!record.preprocessed || !record.gt_mask_proc) {
        throw StateError("gt_slices: subject lacks a preprocessed ground-truth mask");
    }
    const Volume& gt = *record.gt_mask_proc;
    Tensorf batch(gt.nz, 1, gt.ny, gt.nx);
    const std::size_t plane = static_cast<std::size_t>(gt.nx * gt.ny);
    for (std::int64_t z = 0; z < gt.nz; ++z) {
        std::copy_n(gt.slice(z), plane, batch.plane(z, 0));
    }
    return batch;
}

Volume volume_from_slices(const Tensorf& slices, const CropInfo& crop, VolumeKind kind) {
    if (slices.c != 1) {
        throw DimensionError("volume_from_slices: expected single-channel slices, got " +
                             slices.shape_str());
    }
    Volume out(crop.orig_nx, crop.orig_ny, slices.n, kind);
    for (std::int64_t z = 0; z < out.nz; ++z) {
        float* dst = out.slice(z);
        for (std::int64_t y = 0; y < out.ny; ++y) {
            const std::int64_t py = y - crop.off_y;
            if (py < 0 || py >= slices.h) continue;
            for (std::int64_t x = 0; x < out.nx; ++x) {
                const std::int64_t px = x - crop.off_x;
                if (px < 0 || px >= slices.w) continue;
                dst[y * out.nx + x] = slices.at(z, 0, py, px);
            }
        }
    }
    return out;
}

} // namespace stacknet
