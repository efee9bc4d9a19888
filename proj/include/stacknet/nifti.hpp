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

#ifndef STACKNET_NIFTI_HPP
#define STACKNET_NIFTI_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stacknet/volume.hpp"

namespace stacknet {

/// Supported NIfTI-1 datatype codes.
enum class NiftiDataType : std::int16_t {
    uint8 = 2,
    int16 = 4,
    float32 = 16,
};

/// Parses a single-file (.nii) NIfTI-1 volume. Endianness is detected from
/// sizeof_hdr; voxel values are scaled by scl_slope/scl_inter when the
/// slope is nonzero. `kind` tags the result and is validated (masks must
/// be exactly {0,1}, probabilities within [0,1]).
Volume read_nifti(std::span<const std::uint8_t> bytes,
                  VolumeKind kind = VolumeKind::intensity);

Volume read_nifti_file(const std::string& path, VolumeKind kind = VolumeKind::intensity);

/// Serializes a volume as little-endian single-file NIfTI-1 with
/// vox_offset 352, scl_slope 1, scl_inter 0. uint8 and int16 targets
/// require exactly representable values.
std::vector<std::uint8_t> write_nifti(const Volume& vol, NiftiDataType dtype);

void write_nifti_file(const Volume& vol, NiftiDataType dtype, const std::string& path);

} // namespace stacknet

#endif // STACKNET_NIFTI_HPP
