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

#include "stacknet/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "stacknet/errors.hpp"
#include "stacknet/nifti.hpp"

namespace stacknet {

namespace {

std::int64_t flat(std::int64_t x, std::int64_t y, std::int64_t z,
                  const std::array<int, 3>& dims) {
    return x + dims[0] * (y + dims[1] * z);
}

/// All 26 neighbors of a flat index, clipped to the grid.
template <typename Fn>
void for_neighbors26(std::int64_t i, const std::array<int, 3>& dims, Fn&& fn) {
    const std::int64_t x = i % dims[0];
    const std::int64_t y = (i / dims[0]) % dims[1];
    const std::int64_t z = i / (static_cast<std::int64_t>(dims[0]) * dims[1]);
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                const std::int64_t nx = x + dx, ny = y + dy, nz = z + dz;
                if (nx < 0 || nx >= dims[0] || ny < 0 || ny >= dims[1] || nz < 0 ||
                    nz >= dims[2]) {
                    continue;
                }
                fn(flat(nx, ny, nz, dims));
            }
        }
    }
}

} // namespace

void PhantomSpec::validate() const {
    for (int d : dims) {
        if (d < 1) throw ConfigError("phantom: dims must be positive");
    }
    if (dims[0] % 8 != 0 || dims[1] % 8 != 0) {
        throw ConfigError("phantom: X and Y dims must be divisible by 8");
    }
    if (n_small < 0 || n_medium < 0 || n_large < 0) {
        throw ConfigError("phantom: lesion counts must be >= 0");
    }
    auto check_range = [](const std::array<int, 2>& r, int lo, int hi, const char* name) {
        if (r[0] < lo || r[1] > hi || r[0] > r[1]) {
            throw ConfigError(std::string("phantom: ") + name + " volume range [" +
                              std::to_string(r[0]) + "," + std::to_string(r[1]) +
                              "] must lie within [" + std::to_string(lo) + "," +
                              std::to_string(hi) + "]");
        }
    };
    // Ranges must respect the size-class bin edges (<10, 10..20, >20).
    check_range(small_range, 1, 9, "small");
    check_range(medium_range, 10, 20, "medium");
    check_range(large_range, 21, 1 << 20, "large");
    if (noise_sd < 0.0f) throw ConfigError("phantom: noise_sd must be >= 0");
}

std::vector<std::int64_t> grow_lesion(Rng& rng, const std::vector<std::uint8_t>& allowed,
                                      const std::array<int, 3>& dims, int target_volume) {
    if (target_volume < 1) {
        throw ConfigError("grow_lesion: target volume must be >= 1");
    }
    const std::int64_t total =
        static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    if (allowed.size() != static_cast<std::size_t>(total)) {
        throw DimensionError("grow_lesion: allowed grid size does not match dims");
    }

    std::vector<std::int64_t> region;
    for (std::int64_t i = 0; i < total; ++i) {
        if (allowed[static_cast<std::size_t>(i)]) region.push_back(i);
    }
    if (region.size() < static_cast<std::size_t>(target_volume)) {
        throw CapacityError("grow_lesion: region has " + std::to_string(region.size()) +
                            " voxels, need " + std::to_string(target_volume));
    }

    // 0 = free, 1 = lesion, 2 = frontier
    std::vector<std::uint8_t> state(static_cast<std::size_t>(total), 0);
    std::vector<std::int64_t> lesion, frontier;

    const std::int64_t seed_voxel =
        region[static_cast<std::size_t>(rng.uniform_int(region.size()))];
    state[static_cast<std::size_t>(seed_voxel)] = 1;
    lesion.push_back(seed_voxel);

    auto extend_frontier = [&](std::int64_t from) {
        for_neighbors26(from, dims, [&](std::int64_t ni) {
            if (allowed[static_cast<std::size_t>(ni)] &&
                state[static_cast<std::size_t>(ni)] == 0) {
                state[static_cast<std::size_t>(ni)] = 2;
                frontier.push_back(ni);
            }
        });
    };
    extend_frontier(seed_voxel);

    while (lesion.size() < static_cast<std::size_t>(target_volume)) {
        if (frontier.empty()) {
            throw CapacityError(
                "grow_lesion: frontier exhausted at " + std::to_string(lesion.size()) +
                " of " + std::to_string(target_volume) + " voxels");
        }
        const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(frontier.size()));
        const std::int64_t vox = frontier[pick];
        frontier[pick] = frontier.back();
        frontier.pop_back();
        state[static_cast<std::size_t>(vox)] = 1;
        lesion.push_back(vox);
        extend_frontier(vox);
    }
    return lesion;
}

SubjectRecord generate_phantom(const PhantomSpec& spec, const std::string& subject_id,
                               const std::string& center) {
    spec.validate();
    const auto& dims = spec.dims;
    const std::int64_t total =
        static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];

    // Brain: inscribed axis-aligned ellipsoid with a one-voxel margin.
    std::vector<std::uint8_t> brain(static_cast<std::size_t>(total), 0);
    const double ax = 0.48 * dims[0], ay = 0.48 * dims[1], az = 0.48 * dims[2];
    const double cx = (dims[0] - 1) / 2.0, cy = (dims[1] - 1) / 2.0, cz = (dims[2] - 1) / 2.0;
    for (std::int64_t z = 0; z < dims[2]; ++z) {
        for (std::int64_t y = 0; y < dims[1]; ++y) {
            for (std::int64_t x = 0; x < dims[0]; ++x) {
                const double ex = (x - cx) / ax, ey = (y - cy) / ay, ez = (z - cz) / az;
                if (ex * ex + ey * ey + ez * ez <= 1.0) {
                    brain[static_cast<std::size_t>(flat(x, y, z, dims))] = 1;
                }
            }
        }
    }

    Rng rng(splitmix64(spec.seed));
    std::vector<std::uint8_t> lesion_mask(static_cast<std::size_t>(total), 0);
    std::vector<std::uint8_t> allowed = brain;

    auto place_class = [&](int count, const std::array<int, 2>& range) {
        for (int k = 0; k < count; ++k) {
            const int target =
                range[0] + static_cast<int>(rng.uniform_int(
                               static_cast<std::uint64_t>(range[1] - range[0] + 1)));
            std::vector<std::int64_t> voxels;
            bool placed = false;
            for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
                try {
                    voxels = grow_lesion(rng, allowed, dims, target);
                    placed = true;
                } catch (const CapacityError&) {
                    // Seed landed in a pocket too small for this lesion;
                    // a fresh seed draw usually escapes it.
                }
            }
            if (!placed) {
                throw CapacityError("generate_phantom: could not place a lesion of " +
                                    std::to_string(target) + " voxels");
            }
            for (std::int64_t v : voxels) {
                lesion_mask[static_cast<std::size_t>(v)] = 1;
                allowed[static_cast<std::size_t>(v)] = 0;
            }
            // Forbid a one-voxel Chebyshev shell so distinct lesions stay
            // >= 2 voxels apart and never merge under 26-connectivity.
            for (std::int64_t v : voxels) {
                for_neighbors26(v, dims, [&](std::int64_t ni) {
                    allowed[static_cast<std::size_t>(ni)] = 0;
                });
            }
        }
    };
    place_class(spec.n_large, spec.large_range);
    place_class(spec.n_medium, spec.medium_range);
    place_class(spec.n_small, spec.small_range);

    SubjectRecord rec;
    rec.subject_id = subject_id;
    rec.center = center;
    rec.flair = Volume(dims[0], dims[1], dims[2], VolumeKind::intensity);
    rec.t1 = Volume(dims[0], dims[1], dims[2], VolumeKind::intensity);
    Volume gt(dims[0], dims[1], dims[2], VolumeKind::binary_mask);
    rec.flair.spacing = {1.0f, 1.0f, 3.0f};
    rec.t1.spacing = {1.0f, 1.0f, 3.0f};
    gt.spacing = {1.0f, 1.0f, 3.0f};

    for (std::int64_t i = 0; i < total; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        const float base = brain[u] ? spec.brain_intensity : 0.0f;
        const float les = lesion_mask[u] ? 1.0f : 0.0f;
        const float noise_f =
            spec.noise_sd > 0.0f ? static_cast<float>(rng.normal(0.0, spec.noise_sd)) : 0.0f;
        const float noise_t =
            spec.noise_sd > 0.0f ? static_cast<float>(rng.normal(0.0, spec.noise_sd)) : 0.0f;
        rec.flair.data[u] = base + spec.flair_lesion_contrast * les + noise_f;
        rec.t1.data[u] = base + spec.t1_lesion_contrast * les + noise_t;
        gt.data[u] = les;
    }
    rec.gt_mask = std::move(gt);
    return rec;
}

std::string write_phantom_dataset(const std::string& out_dir, int n_subjects, int n_centers,
                                  const PhantomSpec& base_spec) {
    if (n_subjects < 1) throw ConfigError("phantom dataset: n_subjects must be >= 1");
    if (n_centers < 1) throw ConfigError("phantom dataset: n_centers must be >= 1");
    std::filesystem::create_directories(out_dir);

    std::vector<ManifestEntry> manifest;
    for (int s = 0; s < n_subjects; ++s) {
        PhantomSpec spec = base_spec;
        spec.seed = mix_seed(base_spec.seed, static_cast<std::uint64_t>(s));
        char id[16];
        std::snprintf(id, sizeof(id), "s%03d", s);
        const std::string center = "c" + std::to_string(s % n_centers);
        SubjectRecord rec = generate_phantom(spec, id, center);

        ManifestEntry e;
        e.subject_id = rec.subject_id;
        e.center = center;
        e.flair_path = std::string(id) + "_flair.nii";
        e.t1_path = std::string(id) + "_t1.nii";
        e.mask_path = std::string(id) + "_mask.nii";
        const std::filesystem::path dir(out_dir);
        write_nifti_file(rec.flair, NiftiDataType::float32, (dir / e.flair_path).string());
        write_nifti_file(rec.t1, NiftiDataType::float32, (dir / e.t1_path).string());
        write_nifti_file(*rec.gt_mask, NiftiDataType::uint8, (dir / *e.mask_path).string());
        manifest.push_back(std::move(e));
    }
    const std::string manifest_path =
        (std::filesystem::path(out_dir) / "manifest.json").string();
    save_manifest(manifest, manifest_path);
    return manifest_path;
}

} // namespace stacknet
