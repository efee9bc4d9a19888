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

#ifndef STACKNET_AGGREGATE_HPP
#define STACKNET_AGGREGATE_HPP

#include <string>
#include <vector>

#include "stacknet/model.hpp"
#include "stacknet/preprocess.hpp"
#include "stacknet/volume.hpp"

namespace stacknet {

/// Ordered checkpoint list fused by probability averaging, thresholded at
/// 0.4 by default.
struct EnsembleSpec {
    std::vector<std::string> model_paths;
    double threshold = 0.4;

    void validate() const;
};

/// Slice-wise forward pass over a preprocessed subject, reassembled onto
/// the original grid via the stored crop offsets (zero outside the
/// processed region).
Volume predict_volume(const StackNet<float>& model, const SubjectRecord& record);

/// Voxelwise arithmetic mean in list order: per voxel the inputs are summed
/// in order in 64-bit and divided by n, so the result is bit-deterministic
/// and the mean of identical volumes reproduces them exactly.
Volume aggregate_probs(const std::vector<Volume>& volumes);

/// voxel -> 1 iff value >= threshold (inclusive).
Volume binarize(const Volume& prob, double threshold = 0.4);

} // namespace stacknet

#endif // STACKNET_AGGREGATE_HPP
