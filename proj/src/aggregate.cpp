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

#include "stacknet/aggregate.hpp"

#include <algorithm>
#include <cstring>

#include "stacknet/errors.hpp"

namespace stacknet {

void EnsembleSpec::validate() const {
    if (model_paths.empty()) {
        throw ConfigError("ensemble: need at least one model checkpoint");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("ensemble: threshold must lie in (0,1), got " +
                          std::to_string(threshold));
    }
}

Volume predict_volume(const StackNet<float>& model, const SubjectRecord& record) {
    if (!record.preprocessed) {
        throw StateError("predict_volume: subject has not been preprocessed");
    }
    const Tensorf slices = stack_modalities(record);
    if (slices.c != model.config().in_channels) {
        throw ConfigError("predict_volume: model expects " +
                          std::to_string(model.config().in_channels) +
                          " channels, subject provides " + std::to_string(slices.c));
    }

    // Chunked forward keeps activation memory bounded; per-slice results
    // are identical to whole-batch results by the decomposition invariant.
    constexpr std::int64_t kChunk = 8;
    Tensorf probs(slices.n, 1, slices.h, slices.w);
    for (std::int64_t z0 = 0; z0 < slices.n; z0 += kChunk) {
        const std::int64_t count = std::min(kChunk, slices.n - z0);
        Tensorf chunk(count, slices.c, slices.h, slices.w);
        std::memcpy(chunk.data.data(), slices.plane(z0, 0),
                    chunk.data.size() * sizeof(float));
        const Tensorf out = model.forward(chunk);
        std::memcpy(probs.plane(z0, 0), out.data.data(), out.data.size() * sizeof(float));
    }

    Volume vol = volume_from_slices(probs, record.crop, VolumeKind::probability);
    vol.spacing = record.flair.spacing;
    return vol;
}

Volume aggregate_probs(const std::vector<Volume>& volumes) {
    if (volumes.empty()) {
        throw ConfigError("aggregate_probs: empty volume list");
    }
    const Volume& first = volumes.front();
    for (const Volume& v : volumes) {
        if (!v.same_dims(first)) {
            throw DimensionError("aggregate_probs: dims disagree: " + first.dims_str() +
                                 " vs " + v.dims_str());
        }
    }
    Volume out(first.nx, first.ny, first.nz, VolumeKind::probability);
    out.spacing = first.spacing;
    const double n = static_cast<double>(volumes.size());
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double acc = 0.0;
        for (const Volume& v : volumes) acc += static_cast<double>(v.data[i]);
        out.data[i] = static_cast<float>(acc / n);
    }
    return out;
}

Volume binarize(const Volume& prob, double threshold) {
    Volume out(prob.nx, prob.ny, prob.nz, VolumeKind::binary_mask);
    out.spacing = prob.spacing;
    for (std::size_t i = 0; i < prob.data.size(); ++i) {
        out.data[i] = static_cast<double>(prob.data[i]) >= threshold ? 1.0f : 0.0f;
    }
    return out;
}

} // namespace stacknet
