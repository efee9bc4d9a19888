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

#ifndef STACKNET_VOLUME_HPP
#define STACKNET_VOLUME_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stacknet/errors.hpp"

namespace stacknet {

enum class VolumeKind { intensity, probability, binary_mask };

/// 3-D scalar grid with voxel spacing. Data is stored x-fastest, i.e.
/// index (x, y, z) lives at x + nx*(y + ny*z); axial slice z is the
/// contiguous (nx*ny) block.
struct Volume {
    std::int64_t nx = 0, ny = 0, nz = 0;
    std::array<float, 3> spacing{1.0f, 1.0f, 1.0f}; ///< mm per axis
    VolumeKind kind = VolumeKind::intensity;
    std::vector<float> data;

    Volume() = default;
    Volume(std::int64_t nx_, std::int64_t ny_, std::int64_t nz_,
           VolumeKind kind_ = VolumeKind::intensity, float fill = 0.0f)
        : nx(nx_), ny(ny_), nz(nz_), kind(kind_) {
        if (nx_ < 0 || ny_ < 0 || nz_ < 0) {
            throw DimensionError("volume dims must be non-negative");
        }
        data.assign(static_cast<std::size_t>(numel()), fill);
    }

    std::int64_t numel() const { return nx * ny * nz; }

    bool same_dims(const Volume& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz;
    }

    std::string dims_str() const {
        return std::to_string(nx) + "x" + std::to_string(ny) + "x" + std::to_string(nz);
    }

    float& at(std::int64_t x, std::int64_t y, std::int64_t z) {
        return data[static_cast<std::size_t>(x + nx * (y + ny * z))];
    }
    float at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return data[static_cast<std::size_t>(x + nx * (y + ny * z))];
    }

    float* slice(std::int64_t z) { return data.data() + z * nx * ny; }
    const float* slice(std::int64_t z) const { return data.data() + z * nx * ny; }

    /// Throws unless every voxel is exactly 0 or 1.
    void check_binary(const std::string& what) const {
        for (float v : data) {
            if (v != 0.0f && v != 1.0f) {
                throw ValueError(what + ": mask voxels must be exactly 0 or 1");
            }
        }
    }

    std::int64_t count_nonzero() const {
        std::int64_t n = 0;
        for (float v : data) n += (v != 0.0f);
        return n;
    }
};

} // namespace stacknet

#endif // STACKNET_VOLUME_HPP
