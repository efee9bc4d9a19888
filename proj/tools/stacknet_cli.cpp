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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stacknet/aggregate.hpp"
#include "stacknet/folds.hpp"
#include "stacknet/metrics.hpp"
#include "stacknet/model.hpp"
#include "stacknet/nifti.hpp"
#include "stacknet/parallel.hpp"
#include "stacknet/preprocess.hpp"
#include "stacknet/synth.hpp"
#include "stacknet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stacknet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct DimsOption {
    int x = 96, y = 96, z = 16;
};

DimsOption parse_dims(const std::string& s) {
    DimsOption d;
    if (std::sscanf(s.c_str(), "%dx%dx%d", &d.x, &d.y, &d.z) != 3) {
        throw ConfigError("expected dims as XxYxZ, got '" + s + "'");
    }
    return d;
}

std::pair<int, int> parse_target(const std::string& s) {
    int h = 0, w = 0;
    if (std::sscanf(s.c_str(), "%dx%d", &h, &w) != 2) {
        throw ConfigError("expected target as HxW, got '" + s + "'");
    }
    return {h, w};
}

std::array<int, 4> parse_widths(const std::string& s) {
    std::array<int, 4> w{};
    if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &w[0], &w[1], &w[2], &w[3]) != 4) {
        throw ConfigError("expected four channel widths as a,b,c,d, got '" + s + "'");
    }
    return w;
}

Connectivity parse_connectivity(int c) {
    switch (c) {
        case 6: return Connectivity::c6;
        case 18: return Connectivity::c18;
        case 26: return Connectivity::c26;
    }
    throw ConfigError("connectivity must be 6, 18 or 26, got " + std::to_string(c));
}

F1Mode parse_f1_mode(const std::string& s) {
    if (s == "paper") return F1Mode::paper_literal;
    if (s == "harmonic") return F1Mode::harmonic;
    throw ConfigError("f1 mode must be 'paper' or 'harmonic', got '" + s + "'");
}

/// Restricts manifest entries to one side of a subject-wise k-fold split.
std::vector<ManifestEntry> select_fold(std::vector<ManifestEntry> entries, int fold,
                                       int folds, std::uint64_t fold_seed, bool test_side) {
    if (fold < 0) return entries;
    if (fold >= folds) {
        throw ConfigError("fold index " + std::to_string(fold) + " out of range for " +
                          std::to_string(folds) + " folds");
    }
    std::vector<SubjectKey> keys;
    keys.reserve(entries.size());
    for (const auto& e : entries) keys.push_back({e.subject_id, e.center});
    const auto splits = split_folds(keys, folds, fold_seed);
    const auto& ids = test_side ? splits[static_cast<std::size_t>(fold)].test
                                : splits[static_cast<std::size_t>(fold)].train;
    const std::set<std::string> keep(ids.begin(), ids.end());
    std::erase_if(entries, [&keep](const ManifestEntry& e) {
        return keep.count(e.subject_id) == 0;
    });
    return entries;
}

std::vector<SubjectRecord> load_and_preprocess(const std::vector<ManifestEntry>& entries,
                                               const std::string& base_dir, int target_h,
                                               int target_w) {
    PreprocessOptions opts;
    opts.target_h = target_h;
    opts.target_w = target_w;
    std::vector<SubjectRecord> records;
    records.reserve(entries.size());
    for (const auto& e : entries) {
        SubjectRecord rec = load_subject(e, base_dir);
        preprocess_subject(rec, opts);
        records.push_back(std::move(rec));
    }
    return records;
}

/// A sample list is either a plain JSON array of numbers or an evaluate
/// summary, from which the per-subject values of `metric` are taken keyed
/// by subject id.
std::map<std::string, double> read_samples(const std::string& path,
                                           const std::string& metric) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open sample list: " + path);
    json doc;
    try {
        is >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError("sample list", e.byte, e.what());
    }
    std::map<std::string, double> out;
    if (doc.is_array()) {
        int i = 0;
        for (const auto& v : doc) {
            if (!v.is_number()) throw ParseError("sample list", 0, "expected numbers only");
            char key[16];
            std::snprintf(key, sizeof(key), "%06d", i++);
            out[key] = v.get<double>();
        }
        return out;
    }
    if (doc.is_object() && doc.contains("per_subject")) {
        for (const auto& row : doc["per_subject"]) {
            const std::string id = row.at("subject_id").get<std::string>();
            if (!row.contains(metric)) {
                throw ConfigError("ztest: summary has no per-subject metric '" + metric +
                                  "'");
            }
            if (!row[metric].is_number()) {
                throw ValueError("ztest: metric '" + metric + "' is undefined for subject " +
                                 id);
            }
            out[id] = row[metric].get<double>();
        }
        return out;
    }
    throw ParseError("sample list", 0,
                     "expected a JSON number array or an evaluate summary");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << text;
    if (!os) throw IoError("failed writing: " + path);
}

// ---- subcommands ------------------------------------------------------

struct SynthArgs {
    std::string out_dir;
    int subjects = 12;
    int centers = 3;
    std::string dims = "96x96x16";
    int n_small = 8;
    int n_medium = 4;
    int n_large = 2;
    double noise_sd = 5.0;
    std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
    PhantomSpec spec;
    const DimsOption d = parse_dims(a.dims);
    spec.dims = {d.x, d.y, d.z};
    spec.n_small = a.n_small;
    spec.n_medium = a.n_medium;
    spec.n_large = a.n_large;
    spec.noise_sd = static_cast<float>(a.noise_sd);
    spec.seed = a.seed;
    const std::string manifest = write_phantom_dataset(a.out_dir, a.subjects, a.centers, spec);
    std::cout << "wrote " << a.subjects << " phantom subjects; manifest: " << manifest
              << "\n";
    return kExitOk;
}

struct PreprocessArgs {
    std::string manifest;
    std::string out_dir;
    std::string target = "200x200";
    double fixed_threshold = -1.0; // < 0: Otsu
};

int run_preprocess(const PreprocessArgs& a) {
    const auto [th, tw] = parse_target(a.target);
    const std::string base = fs::path(a.manifest).parent_path().string();
    const auto entries = load_manifest(a.manifest);
    fs::create_directories(a.out_dir);

    PreprocessOptions opts;
    opts.target_h = th;
    opts.target_w = tw;
    if (a.fixed_threshold >= 0.0) {
        opts.mask.method = BrainMaskOptions::Method::fixed;
        opts.mask.fixed_threshold = static_cast<float>(a.fixed_threshold);
    }
    for (const auto& e : entries) {
        SubjectRecord rec = load_subject(e, base);
        preprocess_subject(rec, opts);
        const fs::path dir(a.out_dir);
        write_nifti_file(rec.flair, NiftiDataType::float32,
                         (dir / (e.subject_id + "_flair_norm.nii")).string());
        write_nifti_file(rec.t1, NiftiDataType::float32,
                         (dir / (e.subject_id + "_t1_norm.nii")).string());
        write_nifti_file(rec.brain_mask, NiftiDataType::uint8,
                         (dir / (e.subject_id + "_brain_mask.nii")).string());
        std::cout << e.subject_id << ": brain voxels " << rec.brain_mask.count_nonzero()
                  << "\n";
    }
    return kExitOk;
}

struct TrainArgs {
    std::string manifest;
    std::string model_out;
    std::string config_path;
    std::string history_path;
    std::string target = "200x200";
    std::string widths = "64,96,128,256";
    int kernel = 3;
    int depth = 5;
    std::uint64_t model_seed = 0;
    int fold = -1;
    int folds = 5;
    std::uint64_t fold_seed = 0;
    // train-config overrides; negatives keep the config/default value
    int epochs = -1;
    int batch_size = -1;
    double lr = -1.0;
    double smooth = -1.0;
    std::int64_t seed = -1;
    bool no_augment = false;
};

TrainConfig resolve_train_config(const TrainArgs& a) {
    TrainConfig cfg;
    if (!a.config_path.empty()) cfg = train_config_from_json_file(a.config_path);
    if (a.epochs >= 0) cfg.epochs = a.epochs;
    if (a.batch_size >= 0) cfg.batch_size = a.batch_size;
    if (a.lr > 0.0) cfg.learning_rate = a.lr;
    if (a.smooth >= 0.0) cfg.smooth = a.smooth;
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    if (a.no_augment) cfg.augment = false;
    cfg.validate();
    return cfg;
}

StackNetConfig resolve_model_config(const TrainArgs& a, int depth_override = -1) {
    const auto [th, tw] = parse_target(a.target);
    StackNetConfig cfg;
    cfg.kernel_r = a.kernel;
    cfg.stack_depth_L = depth_override > 0 ? depth_override : a.depth;
    cfg.in_channels = 2;
    cfg.channel_widths = parse_widths(a.widths);
    cfg.input_h = th;
    cfg.input_w = tw;
    cfg.seed = a.model_seed;
    cfg.validate();
    return cfg;
}

int run_train(const TrainArgs& a) {
    const TrainConfig tcfg = resolve_train_config(a);
    const StackNetConfig mcfg = resolve_model_config(a);

    const std::string base = fs::path(a.manifest).parent_path().string();
    auto entries = load_manifest(a.manifest);
    entries = select_fold(std::move(entries), a.fold, a.folds, a.fold_seed,
                          /*test_side=*/false);
    if (entries.empty()) throw ConfigError("train: no subjects selected");
    const auto records = load_and_preprocess(entries, base, mcfg.input_h, mcfg.input_w);
    const SliceDataset dataset = SliceDataset::from_records(records);

    StackNetF model(mcfg);
    std::cout << "training: " << records.size() << " subjects, " << dataset.samples.size()
              << " slices, " << model.layer_count() << " layers (L=" << mcfg.stack_depth_L
              << ", r=" << mcfg.kernel_r << ")\n";
    const TrainHistory history = train(model, dataset, tcfg);
    for (const EpochStats& e : history.epochs) {
        std::cout << "epoch " << e.epoch << ": mean loss " << e.mean_loss << "\n";
    }
    model.save_file(a.model_out);
    std::cout << "checkpoint: " << a.model_out << "\n";
    if (!a.history_path.empty()) write_history_jsonl(history, a.history_path);
    return kExitOk;
}

struct PredictArgs {
    std::string manifest;
    std::string model_path;
    std::string out_dir;
    int fold = -1;
    int folds = 5;
    std::uint64_t fold_seed = 0;
};

int run_predict(const PredictArgs& a) {
    StackNetF model = StackNetF::load_file(a.model_path);
    const std::string base = fs::path(a.manifest).parent_path().string();
    auto entries = load_manifest(a.manifest);
    entries = select_fold(std::move(entries), a.fold, a.folds, a.fold_seed,
                          /*test_side=*/true);
    const auto records = load_and_preprocess(entries, base, model.config().input_h,
                                             model.config().input_w);
    fs::create_directories(a.out_dir);
    for (const SubjectRecord& rec : records) {
        const Volume prob = predict_volume(model, rec);
        const std::string path =
            (fs::path(a.out_dir) / (rec.subject_id + "_prob.nii")).string();
        write_nifti_file(prob, NiftiDataType::float32, path);
        std::cout << rec.subject_id << " -> " << path << "\n";
    }
    return kExitOk;
}

struct EnsembleArgs {
    std::string manifest;
    std::vector<std::string> model_paths;
    std::string out_dir;
    double threshold = 0.4;
    int fold = -1;
    int folds = 5;
    std::uint64_t fold_seed = 0;
};

int run_ensemble(const EnsembleArgs& a) {
    EnsembleSpec spec;
    spec.model_paths = a.model_paths;
    spec.threshold = a.threshold;
    spec.validate();

    std::vector<StackNetF> models;
    models.reserve(spec.model_paths.size());
    for (const std::string& p : spec.model_paths) models.push_back(StackNetF::load_file(p));
    for (const StackNetF& m : models) {
        if (m.config().input_h != models[0].config().input_h ||
            m.config().input_w != models[0].config().input_w ||
            m.config().in_channels != models[0].config().in_channels) {
            throw ConfigError("ensemble: checkpoints disagree on input geometry");
        }
    }

    const std::string base = fs::path(a.manifest).parent_path().string();
    auto entries = load_manifest(a.manifest);
    entries = select_fold(std::move(entries), a.fold, a.folds, a.fold_seed,
                          /*test_side=*/true);
    const auto records = load_and_preprocess(entries, base, models[0].config().input_h,
                                             models[0].config().input_w);
    fs::create_directories(a.out_dir);
    for (const SubjectRecord& rec : records) {
        std::vector<Volume> probs;
        probs.reserve(models.size());
        for (const StackNetF& m : models) probs.push_back(predict_volume(m, rec));
        const Volume fused = aggregate_probs(probs);
        const Volume mask = binarize(fused, spec.threshold);
        const fs::path dir(a.out_dir);
        write_nifti_file(fused, NiftiDataType::float32,
                         (dir / (rec.subject_id + "_prob.nii")).string());
        write_nifti_file(mask, NiftiDataType::uint8,
                         (dir / (rec.subject_id + "_mask.nii")).string());
        std::cout << rec.subject_id << ": mask voxels " << mask.count_nonzero() << "\n";
    }
    return kExitOk;
}

struct EvaluateArgs {
    std::string manifest;
    std::string pred_dir;
    std::string out_dir;
    int connectivity = 26;
    std::string f1_mode = "paper";
    int fold = -1;
    int folds = 5;
    std::uint64_t fold_seed = 0;
};

int run_evaluate(const EvaluateArgs& a) {
    const Connectivity conn = parse_connectivity(a.connectivity);
    const F1Mode mode = parse_f1_mode(a.f1_mode);
    const std::string base = fs::path(a.manifest).parent_path().string();
    auto entries = load_manifest(a.manifest);
    entries = select_fold(std::move(entries), a.fold, a.folds, a.fold_seed,
                          /*test_side=*/true);
    fs::create_directories(a.out_dir);

    double dice_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
    std::int64_t f1_count = 0;
    SizeHistogram sizes_total, gt_sizes_total;
    std::int64_t ng = 0, np = 0, nf = 0;
    json per_subject = json::array();

    std::int64_t evaluated = 0;
    for (const auto& e : entries) {
        if (!e.mask_path) {
            throw ConfigError("evaluate: subject " + e.subject_id + " has no ground truth");
        }
        const SubjectRecord rec = load_subject(e, base);
        const std::string pred_path =
            (fs::path(a.pred_dir) / (e.subject_id + "_mask.nii")).string();
        const Volume pred = read_nifti_file(pred_path, VolumeKind::binary_mask);

        const MetricsReport rep = evaluate_pair(*rec.gt_mask, pred, conn, mode);
        write_metrics_json(rep,
                           (fs::path(a.out_dir) / (e.subject_id + "_metrics.json")).string());

        dice_sum += rep.dice;
        recall_sum += rep.lesion_recall;
        if (rep.lesion_f1) {
            f1_sum += *rep.lesion_f1;
            ++f1_count;
        }
        ng += rep.n_g;
        np += rep.n_p;
        nf += rep.n_f;
        sizes_total.small += rep.sizes.small;
        sizes_total.medium += rep.sizes.medium;
        sizes_total.large += rep.sizes.large;
        gt_sizes_total.small += rep.gt_sizes.small;
        gt_sizes_total.medium += rep.gt_sizes.medium;
        gt_sizes_total.large += rep.gt_sizes.large;
        ++evaluated;

        json row{{"subject_id", e.subject_id},
                 {"dice", rep.dice},
                 {"lesion_recall", rep.lesion_recall}};
        row["lesion_f1"] = rep.lesion_f1 ? json(*rep.lesion_f1) : json(nullptr);
        per_subject.push_back(std::move(row));
        std::cout << e.subject_id << ": dice " << rep.dice << ", recall "
                  << rep.lesion_recall << "\n";
    }
    if (evaluated == 0) throw ConfigError("evaluate: no subjects selected");

    json summary{
        {"subjects", evaluated},
        {"mean_dice", dice_sum / static_cast<double>(evaluated)},
        {"mean_lesion_recall", recall_sum / static_cast<double>(evaluated)},
        {"mean_lesion_f1",
         f1_count > 0 ? json(f1_sum / static_cast<double>(f1_count)) : json(nullptr)},
        {"f1_defined_subjects", f1_count},
        {"totals",
         {{"n_g", ng},
          {"n_p", np},
          {"n_f", nf},
          {"sizes",
           {{"small", sizes_total.small},
            {"medium", sizes_total.medium},
            {"large", sizes_total.large}}},
          {"gt_sizes",
           {{"small", gt_sizes_total.small},
            {"medium", gt_sizes_total.medium},
            {"large", gt_sizes_total.large}}}}},
        {"per_subject", per_subject},
    };
    write_text((fs::path(a.out_dir) / "summary.json").string(), summary.dump(2) + "\n");
    std::cout << "summary: mean dice " << summary["mean_dice"] << " over " << evaluated
              << " subjects\n";
    return kExitOk;
}

struct DepthSweepArgs {
    TrainArgs train;
    std::string depths = "1,2,3,4,5,6";
    std::string report_path = "depth_sweep.json";
    double threshold = 0.4;
    int connectivity = 26;
    std::string f1_mode = "paper";
    bool all_folds = false;
};

struct SweepScores {
    double dice_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
    std::int64_t subjects = 0, f1_count = 0;

    void add(const MetricsReport& rep) {
        dice_sum += rep.dice;
        recall_sum += rep.lesion_recall;
        if (rep.lesion_f1) {
            f1_sum += *rep.lesion_f1;
            ++f1_count;
        }
        ++subjects;
    }
};

int run_depth_sweep(const DepthSweepArgs& a) {
    std::vector<int> depths;
    {
        std::string item;
        std::istringstream ss(a.depths);
        while (std::getline(ss, item, ',')) depths.push_back(std::stoi(item));
        if (depths.empty()) throw ConfigError("depth-sweep: no depths given");
    }
    const Connectivity conn = parse_connectivity(a.connectivity);
    const F1Mode mode = parse_f1_mode(a.f1_mode);
    const TrainConfig base_tcfg = resolve_train_config(a.train);

    const std::string base = fs::path(a.train.manifest).parent_path().string();
    const auto all_entries = load_manifest(a.train.manifest);
    const StackNetConfig probe = resolve_model_config(a.train);

    // Each pass trains on one side of a split and scores every held-out
    // subject. With --all-folds the passes cover all k splits, so each
    // subject is scored exactly once; otherwise there is a single pass
    // (the chosen fold, or train == test when no fold is given).
    struct Pass {
        std::vector<SubjectRecord> train_records;
        std::vector<const SubjectRecord*> test_records;
        std::uint64_t seed_salt = 0;
    };
    std::vector<Pass> passes;
    std::vector<SubjectRecord> all_records; // shared storage for --all-folds

    if (a.all_folds) {
        all_records = load_and_preprocess(all_entries, base, probe.input_h, probe.input_w);
        std::vector<SubjectKey> keys;
        for (const auto& e : all_entries) keys.push_back({e.subject_id, e.center});
        const auto splits = split_folds(keys, a.train.folds, a.train.fold_seed);
        for (std::size_t f = 0; f < splits.size(); ++f) {
            Pass pass;
            pass.seed_salt = f;
            const std::set<std::string> train_ids(splits[f].train.begin(),
                                                  splits[f].train.end());
            for (const SubjectRecord& rec : all_records) {
                if (train_ids.count(rec.subject_id)) {
                    pass.train_records.push_back(rec);
                } else {
                    pass.test_records.push_back(&rec);
                }
            }
            passes.push_back(std::move(pass));
        }
    } else {
        const auto train_entries = select_fold(all_entries, a.train.fold, a.train.folds,
                                               a.train.fold_seed, /*test_side=*/false);
        const auto test_entries = select_fold(all_entries, a.train.fold, a.train.folds,
                                              a.train.fold_seed, /*test_side=*/true);
        if (train_entries.empty() || test_entries.empty()) {
            throw ConfigError("depth-sweep: empty train or test selection");
        }
        Pass pass;
        pass.train_records =
            load_and_preprocess(train_entries, base, probe.input_h, probe.input_w);
        all_records = load_and_preprocess(test_entries, base, probe.input_h, probe.input_w);
        for (const SubjectRecord& rec : all_records) pass.test_records.push_back(&rec);
        passes.push_back(std::move(pass));
    }

    json rows = json::array();
    for (const int depth : depths) {
        SweepScores scores;
        int layer_count = 0;
        for (const Pass& pass : passes) {
            StackNetConfig mcfg = resolve_model_config(a.train, depth);
            mcfg.seed = mix_seed(mcfg.seed, pass.seed_salt);
            TrainConfig tcfg = base_tcfg;
            tcfg.seed = mix_seed(tcfg.seed, pass.seed_salt);

            StackNetF model(mcfg);
            layer_count = model.layer_count();
            const SliceDataset dataset = SliceDataset::from_records(pass.train_records);
            (void)train(model, dataset, tcfg);
            for (const SubjectRecord* rec : pass.test_records) {
                const Volume prob = predict_volume(model, *rec);
                const Volume mask = binarize(prob, a.threshold);
                scores.add(evaluate_pair(*rec->gt_mask, mask, conn, mode));
            }
        }
        const double n = static_cast<double>(scores.subjects);
        json row{{"depth", depth},
                 {"layer_count", layer_count},
                 {"test_subjects", scores.subjects},
                 {"dice", scores.dice_sum / n},
                 {"lesion_recall", scores.recall_sum / n},
                 {"lesion_f1",
                  scores.f1_count > 0
                      ? json(scores.f1_sum / static_cast<double>(scores.f1_count))
                      : json(nullptr)}};
        std::cout << "depth " << depth << ": layers " << layer_count << ", dice "
                  << row["dice"] << " over " << scores.subjects << " test subjects\n";
        rows.push_back(std::move(row));
    }
    json report{{"rows", rows}};
    write_text(a.report_path, report.dump(2) + "\n");
    std::cout << "report: " << a.report_path << "\n";
    return kExitOk;
}

struct ZTestArgs {
    std::string a_path;
    std::string b_path;
    std::string out_path;
    std::string metric = "lesion_recall";
};

int run_ztest(const ZTestArgs& a) {
    const auto sa = read_samples(a.a_path, a.metric);
    const auto sb = read_samples(a.b_path, a.metric);
    // Pairs align by key; both sides must cover the same subjects.
    std::vector<double> xs, ys;
    for (const auto& [key, value] : sa) {
        const auto it = sb.find(key);
        if (it == sb.end()) {
            throw ConfigError("ztest: subject '" + key + "' missing from " + a.b_path);
        }
        xs.push_back(value);
        ys.push_back(it->second);
    }
    if (sa.size() != sb.size()) {
        throw ConfigError("ztest: sample lists cover different subjects");
    }
    const ZTestResult res = paired_z_test(xs, ys);
    json doc{{"n", xs.size()}, {"z", res.z}, {"p_two_sided", res.p_two_sided}};
    const std::string text = doc.dump(2) + "\n";
    if (a.out_path.empty()) {
        std::cout << text;
    } else {
        write_text(a.out_path, text);
    }
    return kExitOk;
}

void add_fold_options(CLI::App* cmd, int& fold, int& folds, std::uint64_t& fold_seed) {
    cmd->add_option("--fold", fold, "subject-wise fold index to hold out (default: none)");
    cmd->add_option("--folds", folds, "number of folds")->check(CLI::PositiveNumber);
    cmd->add_option("--fold-seed", fold_seed, "seed for the fold split");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stack-Net lesion segmentation pipeline"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = hardware default)");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a phantom dataset");
    synth->add_option("--out", synth_args.out_dir, "output directory")->required();
    synth->add_option("--subjects", synth_args.subjects, "number of subjects");
    synth->add_option("--centers", synth_args.centers, "number of centers");
    synth->add_option("--dims", synth_args.dims, "volume dims XxYxZ");
    synth->add_option("--small", synth_args.n_small, "small lesions per subject");
    synth->add_option("--medium", synth_args.n_medium, "medium lesions per subject");
    synth->add_option("--large", synth_args.n_large, "large lesions per subject");
    synth->add_option("--noise-sd", synth_args.noise_sd, "additive Gaussian noise sd");
    synth->add_option("--seed", synth_args.seed, "dataset seed");

    PreprocessArgs pre_args;
    auto* pre = app.add_subcommand("preprocess", "crop/pad, brain-mask and normalize");
    pre->add_option("--manifest", pre_args.manifest, "subject manifest")->required();
    pre->add_option("--out", pre_args.out_dir, "output directory")->required();
    pre->add_option("--target", pre_args.target, "slice target HxW");
    pre->add_option("--fixed-threshold", pre_args.fixed_threshold,
                    "fixed brain-mask threshold instead of Otsu");

    TrainArgs train_args;
    auto* tr = app.add_subcommand("train", "train one model");
    tr->add_option("--manifest", train_args.manifest, "subject manifest")->required();
    tr->add_option("--out", train_args.model_out, "checkpoint output path")->required();
    tr->add_option("--config", train_args.config_path, "training config JSON");
    tr->add_option("--history", train_args.history_path, "per-epoch loss JSONL");
    tr->add_option("--target", train_args.target, "slice target HxW");
    tr->add_option("--widths", train_args.widths, "channel widths a,b,c,d");
    tr->add_option("--kernel", train_args.kernel, "stack kernel size (odd)");
    tr->add_option("--depth", train_args.depth, "stack depth L");
    tr->add_option("--model-seed", train_args.model_seed, "weight init seed");
    tr->add_option("--epochs", train_args.epochs, "override epochs");
    tr->add_option("--batch-size", train_args.batch_size, "override batch size");
    tr->add_option("--lr", train_args.lr, "override learning rate");
    tr->add_option("--smooth", train_args.smooth, "override dice smooth term");
    tr->add_option("--seed", train_args.seed, "override training seed");
    tr->add_flag("--no-augment", train_args.no_augment, "disable augmentation");
    add_fold_options(tr, train_args.fold, train_args.folds, train_args.fold_seed);

    PredictArgs pred_args;
    auto* pr = app.add_subcommand("predict", "probability volumes from one model");
    pr->add_option("--model", pred_args.model_path, "checkpoint")->required();
    pr->add_option("--manifest", pred_args.manifest, "subject manifest")->required();
    pr->add_option("--out", pred_args.out_dir, "output directory")->required();
    add_fold_options(pr, pred_args.fold, pred_args.folds, pred_args.fold_seed);

    EnsembleArgs ens_args;
    auto* en =
        app.add_subcommand("ensemble", "fuse model probabilities and write binary masks");
    en->add_option("--models", ens_args.model_paths, "checkpoints (>= 1)")
        ->required()
        ->delimiter(',');
    en->add_option("--manifest", ens_args.manifest, "subject manifest")->required();
    en->add_option("--out", ens_args.out_dir, "output directory")->required();
    en->add_option("--threshold", ens_args.threshold, "binarization threshold");
    add_fold_options(en, ens_args.fold, ens_args.folds, ens_args.fold_seed);

    EvaluateArgs eval_args;
    auto* ev = app.add_subcommand("evaluate", "per-subject metrics plus a mean summary");
    ev->add_option("--manifest", eval_args.manifest, "subject manifest with ground truth")
        ->required();
    ev->add_option("--pred", eval_args.pred_dir, "directory with <id>_mask.nii")->required();
    ev->add_option("--out", eval_args.out_dir, "output directory")->required();
    ev->add_option("--connectivity", eval_args.connectivity, "component connectivity");
    ev->add_option("--f1-mode", eval_args.f1_mode, "paper | harmonic");
    add_fold_options(ev, eval_args.fold, eval_args.folds, eval_args.fold_seed);

    DepthSweepArgs sweep_args;
    auto* sw = app.add_subcommand("depth-sweep", "train and evaluate a range of depths");
    sw->add_option("--manifest", sweep_args.train.manifest, "subject manifest")->required();
    sw->add_option("--depths", sweep_args.depths, "comma-separated stack depths");
    sw->add_option("--out", sweep_args.report_path, "report JSON path");
    sw->add_option("--config", sweep_args.train.config_path, "training config JSON");
    sw->add_option("--target", sweep_args.train.target, "slice target HxW");
    sw->add_option("--widths", sweep_args.train.widths, "channel widths a,b,c,d");
    sw->add_option("--kernel", sweep_args.train.kernel, "stack kernel size (odd)");
    sw->add_option("--model-seed", sweep_args.train.model_seed, "weight init seed");
    sw->add_option("--epochs", sweep_args.train.epochs, "override epochs");
    sw->add_option("--batch-size", sweep_args.train.batch_size, "override batch size");
    sw->add_option("--lr", sweep_args.train.lr, "override learning rate");
    sw->add_option("--seed", sweep_args.train.seed, "override training seed");
    sw->add_flag("--no-augment", sweep_args.train.no_augment, "disable augmentation");
    sw->add_option("--threshold", sweep_args.threshold, "binarization threshold");
    sw->add_option("--connectivity", sweep_args.connectivity, "component connectivity");
    sw->add_option("--f1-mode", sweep_args.f1_mode, "paper | harmonic");
    sw->add_flag("--all-folds", sweep_args.all_folds,
                 "run the full subject-wise cross-validation per depth");
    add_fold_options(sw, sweep_args.train.fold, sweep_args.train.folds,
                     sweep_args.train.fold_seed);

    ZTestArgs z_args;
    auto* zt = app.add_subcommand("ztest", "paired Z-test over two JSON number arrays");
    zt->add_option("--a", z_args.a_path, "first sample list or evaluate summary")
        ->required();
    zt->add_option("--b", z_args.b_path, "second sample list or evaluate summary")
        ->required();
    zt->add_option("--metric", z_args.metric,
                   "per-subject metric to compare when given summaries");
    zt->add_option("--out", z_args.out_path, "result JSON path (default: stdout)");

    try {
        app.parse(argc, argv);
        set_max_threads(threads);
        if (synth->parsed()) return run_synth(synth_args);
        if (pre->parsed()) return run_preprocess(pre_args);
        if (tr->parsed()) return run_train(train_args);
        if (pr->parsed()) return run_predict(pred_args);
        if (en->parsed()) return run_ensemble(ens_args);
        if (ev->parsed()) return run_evaluate(eval_args);
        if (sw->parsed()) return run_depth_sweep(sweep_args);
        if (zt->parsed()) return run_ztest(z_args);
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitData;
    }
}
