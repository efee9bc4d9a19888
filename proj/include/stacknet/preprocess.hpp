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

#ifndef STACKNET_PREPROCESS_HPP
#define STACKNET_PREPROCESS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stacknet/tensor.hpp"
#include "stacknet/volume.hpp"

namespace stacknet {

/// How to map binarized outputs from the processed grid back onto the
/// original grid: off_* is the index in the original grid of processed
/// pixel 0 along that axis (negative when the slice was padded).
struct CropInfo {
    std::int64_t orig_nx = 0, orig_ny = 0;
    int off_x = 0, off_y = 0;
};

/// One subject: co-registered FLAIR and T1, optional ground-truth lesion
/// mask, plus crop/pad bookkeeping once preprocessed. The ground truth on
/// the original grid is kept untouched for evaluation; gt_mask_proc holds
/// its crop to the processed grid for training.
struct SubjectRecord {
    std::string subject_id;
    std::string center;
    Volume flair;
    Volume t1;
    std::optional<Volume> gt_mask;
    std::optional<Volume> gt_mask_proc;
    Volume brain_mask;
    CropInfo crop;
    bool preprocessed = false;
};

struct BrainMaskOptions {
    enum class Method { otsu, fixed };
    Method method = Method::otsu;
    float fixed_threshold = 0.0f; ///< used when method == fixed; foreground is v > threshold
};

struct PreprocessOptions {
    int target_h = 200; ///< rows (y axis)
    int target_w = 200; ///< cols (x axis)
    BrainMaskOptions mask;
};

/// Center-crops dims above target, zero-pads dims below (extra voxel on
/// the high side when the padding is odd). Slice shape is (1,1,H,W);
/// returned offsets are (off_y, off_x) as defined in CropInfo.
std::pair<Tensorf, std::array<int, 2>> crop_or_pad_slice(const Tensorf& slice, int target_h,
                                                         int target_w);

/// Same mapping applied to every axial slice of a volume.
Volume crop_or_pad_volume(const Volume& vol, int target_h, int target_w, CropInfo* info);

/// Otsu threshold over nonzero voxels, then per-axial-slice hole filling
/// (background 4-connected regions not touching the slice border become
/// foreground). If all nonzero voxels share one value the mask is simply
/// the nonzero support.
Volume brain_mask(const Volume& flair, const BrainMaskOptions& opts = {});

/// Within the mask, v' = (v - mean) / std using within-mask statistics
/// (population std); everything outside the mask is set to 0.
Volume gaussian_normalize(const Volume& vol, const Volume& mask);

/// Full pipeline: crop/pad all volumes, extract the brain mask from FLAIR,
/// normalize both modalities within it.
void preprocess_subject(SubjectRecord& record, const PreprocessOptions& opts = {});

/// Batch of axial slices, channel 0 = FLAIR, channel 1 = T1, z order:
/// shape (Z, 2, target_h, target_w).
Tensorf stack_modalities(const SubjectRecord& record);

/// Ground-truth slices on the processed grid, shape (Z, 1, H, W).
Tensorf gt_slices(const SubjectRecord& record);

/// Inverse of the crop/pad mapping: places per-slice values back on the
/// original grid, zero outside the processed region.
Volume volume_from_slices(const Tensorf& slices, const CropInfo& crop, VolumeKind kind);

// -- subject manifest -------------------------------------------------

struct ManifestEntry {
    std::string subject_id;
    std::string center;
    std::string flair_path;
    std::string t1_path;
    std::optional<std::string> mask_path;
};

std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

/// Reads the three volumes of a manifest entry; relative paths resolve
/// against base_dir (normally the manifest's directory).
SubjectRecord load_subject(const ManifestEntry& entry, const std::string& base_dir);

} // namespace stacknet

#endif // STACKNET_PREPROCESS_HPP
