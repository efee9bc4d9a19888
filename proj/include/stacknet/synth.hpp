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

#ifndef STACKNET_SYNTH_HPP
#define STACKNET_SYNTH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stacknet/preprocess.hpp"
#include "stacknet/rng.hpp"
#include "stacknet/volume.hpp"

namespace stacknet {

/// Synthetic brain/lesion phantom: an ellipsoidal "brain" with randomly
/// grown lesions in three controlled size classes, hyperintense on FLAIR
/// and hypointense on T1, plus additive Gaussian noise.
struct PhantomSpec {
    std::array<int, 3> dims{96, 96, 16};
    int n_small = 0;
    int n_medium = 0;
    int n_large = 0;
    std::array<int, 2> small_range{1, 9};    ///< target lesion volumes, inclusive
    std::array<int, 2> medium_range{10, 20};
    std::array<int, 2> large_range{21, 60};
    float brain_intensity = 100.0f;
    float flair_lesion_contrast = 80.0f;
    float t1_lesion_contrast = -40.0f;
    float noise_sd = 5.0f;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Connected random growth: starting from a uniformly chosen seed voxel of
/// the allowed region, adds uniformly chosen frontier voxels (26-adjacent)
/// until exactly target_volume voxels are placed. `allowed` is an
/// occupancy grid of size dims[0]*dims[1]*dims[2], x fastest.
std::vector<std::int64_t> grow_lesion(Rng& rng, const std::vector<std::uint8_t>& allowed,
                                      const std::array<int, 3>& dims, int target_volume);

/// Deterministic in spec.seed. Lesion components are separated by at least
/// 2 voxels (Chebyshev) so ground-truth component counts are unambiguous
/// under 26-connectivity.
SubjectRecord generate_phantom(const PhantomSpec& spec, const std::string& subject_id = "s0",
                               const std::string& center = "c0");

/// Writes `n_subjects` phantoms (round-robin across centers) as NIfTI
/// volumes plus a subject manifest; returns the manifest path.
std::string write_phantom_dataset(const std::string& out_dir, int n_subjects, int n_centers,
                                  const PhantomSpec& base_spec);

} // namespace stacknet

#endif // STACKNET_SYNTH_HPP
