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

#include "stacknet/train.hpp"

#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "stacknet/errors.hpp"
#include "stacknet/rng.hpp"

namespace stacknet {

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
    if (smooth < 0.0) throw ConfigError("train: smooth must be >= 0");
    if (aug.zoom_lo <= 0.0 || aug.zoom_hi < aug.zoom_lo) {
        throw ConfigError("train: zoom range must satisfy 0 < zoom_lo <= zoom_hi");
    }
}

TrainConfig train_config_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("train config", e.byte, e.what());
    }
    TrainConfig cfg;
    try {
        if (doc.contains("epochs")) cfg.epochs = doc["epochs"].get<int>();
        if (doc.contains("batch_size")) cfg.batch_size = doc["batch_size"].get<int>();
        if (doc.contains("learning_rate")) {
            cfg.learning_rate = doc["learning_rate"].get<double>();
        }
        if (doc.contains("rotation_deg")) {
            cfg.aug.max_rotation_deg = doc["rotation_deg"].get<double>();
        }
        if (doc.contains("shear")) cfg.aug.max_shear = doc["shear"].get<double>();
        if (doc.contains("zoom_lo")) cfg.aug.zoom_lo = doc["zoom_lo"].get<double>();
        if (doc.contains("zoom_hi")) cfg.aug.zoom_hi = doc["zoom_hi"].get<double>();
        if (doc.contains("augment")) cfg.augment = doc["augment"].get<bool>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("smooth")) cfg.smooth = doc["smooth"].get<double>();
        if (doc.contains("dice_variant")) {
            const std::string v = doc["dice_variant"].get<std::string>();
            if (v == "squared") {
                cfg.dice_variant = DiceVariant::squared;
            } else if (v == "plain") {
                cfg.dice_variant = DiceVariant::plain;
            } else {
                throw ConfigError("train: dice_variant must be \"squared\" or \"plain\"");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("train config", 0, e.what());
    }
    cfg.validate();
    return cfg;
}

TrainConfig train_config_from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open train config: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return train_config_from_json(text);
}

std::string train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json doc{
        {"epochs", cfg.epochs},
        {"batch_size", cfg.batch_size},
        {"learning_rate", cfg.learning_rate},
        {"rotation_deg", cfg.aug.max_rotation_deg},
        {"shear", cfg.aug.max_shear},
        {"zoom_lo", cfg.aug.zoom_lo},
        {"zoom_hi", cfg.aug.zoom_hi},
        {"augment", cfg.augment},
        {"seed", cfg.seed},
        {"smooth", cfg.smooth},
        {"dice_variant", cfg.dice_variant == DiceVariant::squared ? "squared" : "plain"},
    };
    return doc.dump(2);
}

SliceDataset SliceDataset::from_records(std::span<const SubjectRecord> records) {
    SliceDataset ds;
    for (const SubjectRecord& rec : records) {
        const Tensorf images = stack_modalities(rec);
        const Tensorf masks = gt_slices(rec);
        if (ds.samples.empty()) {
            ds.h = images.h;
            ds.w = images.w;
        } else if (images.h != ds.h || images.w != ds.w) {
            throw DimensionError("dataset: subject " + rec.subject_id +
                                 " slice dims disagree with the rest of the dataset");
        }
        for (std::int64_t z = 0; z < images.n; ++z) {
            SliceSample s;
            s.image = Tensorf(1, images.c, images.h, images.w);
            s.mask = Tensorf(1, 1, masks.h, masks.w);
            std::memcpy(s.image.data.data(), images.plane(z, 0),
                        s.image.data.size() * sizeof(float));
            std::memcpy(s.mask.data.data(), masks.plane(z, 0),
                        s.mask.data.size() * sizeof(float));
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

void write_history_jsonl(const TrainHistory& history, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open history file for writing: " + path);
    for (const EpochStats& e : history.epochs) {
        nlohmann::json line{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}};
        os << line.dump() << "\n";
    }
    if (!os) throw IoError("failed writing history file: " + path);
}

double train_on_batch(StackNet<float>& model, Adam<float>& opt, const Tensorf& images,
                      const Tensorf& masks, const TrainConfig& cfg) {
    StackNetCache<float> cache;
    const Tensorf pred = model.forward(images, &cache);
    const auto loss = soft_dice_loss(pred, masks, cfg.smooth, cfg.dice_variant);
    model.zero_grads();
    model.backward(loss.grad_pred, cache);
    opt.step(cfg.learning_rate);
    return loss.loss;
}

TrainHistory train(StackNet<float>& model, const SliceDataset& dataset,
                   const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.samples.empty()) {
        throw ConfigError("train: dataset is empty");
    }

    Adam<float> opt(model.params());
    TrainHistory history;

    std::vector<std::size_t> order(dataset.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x9d5c, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::int64_t steps = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count =
                std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));

            Tensorf images(static_cast<std::int64_t>(count), 2, dataset.h, dataset.w);
            Tensorf masks(static_cast<std::int64_t>(count), 1, dataset.h, dataset.w);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t idx = order[start + i];
                const SliceSample& s = dataset.samples[idx];
                const float* img_src = s.image.data.data();
                const float* msk_src = s.mask.data.data();
                Tensorf aug_img, aug_msk;
                if (cfg.augment) {
                    Rng sample_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                            static_cast<std::uint64_t>(idx)));
                    std::tie(aug_img, aug_msk) =
                        augment_sample(s.image, s.mask, sample_rng, cfg.aug);
                    img_src = aug_img.data.data();
                    msk_src = aug_msk.data.data();
                }
                std::memcpy(images.plane(static_cast<std::int64_t>(i), 0), img_src,
                            s.image.data.size() * sizeof(float));
                std::memcpy(masks.plane(static_cast<std::int64_t>(i), 0), msk_src,
                            s.mask.data.size() * sizeof(float));
            }

            loss_sum += train_on_batch(model, opt, images, masks, cfg);
            ++steps;
        }
        history.epochs.push_back({epoch, loss_sum / static_cast<double>(steps)});
    }
    return history;
}

} // namespace stacknet
