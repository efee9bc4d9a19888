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

#ifndef STACKNET_TRAIN_HPP
#define STACKNET_TRAIN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stacknet/augment.hpp"
#include "stacknet/loss.hpp"
#include "stacknet/model.hpp"
#include "stacknet/optim.hpp"
#include "stacknet/preprocess.hpp"
#include "stacknet/tensor.hpp"

namespace stacknet {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 30;
    double learning_rate = 0.0002;
    AugmentRanges aug;
    bool augment = true;
    std::uint64_t seed = 0;
    double smooth = 1.0;
    DiceVariant dice_variant = DiceVariant::squared;

    void validate() const;
};

/// JSON document mirroring the TrainConfig field names; missing fields keep
/// their defaults.
TrainConfig train_config_from_json(const std::string& text);
TrainConfig train_config_from_json_file(const std::string& path);
std::string train_config_to_json(const TrainConfig& cfg);

/// One training sample: a (1, 2, H, W) image pair and its (1, 1, H, W)
/// binary mask.
struct SliceSample {
    Tensorf image;
    Tensorf mask;
};

struct SliceDataset {
    std::vector<SliceSample> samples;
    std::int64_t h = 0, w = 0;

    /// Flattens preprocessed subjects (with ground truth) into axial-slice
    /// samples; slices without lesions are kept.
    static SliceDataset from_records(std::span<const SubjectRecord> records);
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

/// One JSON object per line: {"epoch": e, "mean_loss": l}.
void write_history_jsonl(const TrainHistory& history, const std::string& path);

/// forward -> soft Dice -> backward -> Adam step on one prepared batch;
/// returns the loss before the step.
double train_on_batch(StackNet<float>& model, Adam<float>& opt, const Tensorf& images,
                      const Tensorf& masks, const TrainConfig& cfg);

/// The full recipe: epochs x batches of [augment -> forward -> dice ->
/// backward -> adam]. Deterministic given cfg.seed; per-sample augmentation
/// streams are derived from (seed, epoch, sample index) so results do not
/// depend on worker count. epochs == 0 leaves the model untouched.
TrainHistory train(StackNet<float>& model, const SliceDataset& dataset,
                   const TrainConfig& cfg);

} // namespace stacknet

#endif // STACKNET_TRAIN_HPP
