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

// Acceptance suite: one pass/fail line per criterion, exit code = number
// of failed criteria. The end-to-end criteria drive the CLI binary named
// by the STACKNET_CLI environment variable (or argv[1]).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stacknet/aggregate.hpp"
#include "stacknet/folds.hpp"
#include "stacknet/grad_check.hpp"
#include "stacknet/layers.hpp"
#include "stacknet/loss.hpp"
#include "stacknet/metrics.hpp"
#include "stacknet/model.hpp"
#include "stacknet/nifti.hpp"
#include "stacknet/optim.hpp"
#include "stacknet/rng.hpp"
#include "stacknet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stacknet;

namespace {

int g_failures = 0;
std::string g_cli_path;
fs::path g_workdir;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << name
              << " — " << detail << "\n";
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool run_cli(const std::string& args, const std::string& log_name) {
    const std::string log = (g_workdir / log_name).string();
    const std::string cmd = g_cli_path + " " + args + " > " + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) {
        std::cout << "  command failed (" << rc << "): " << cmd << "\n";
        std::ifstream is(log);
        std::string line;
        while (std::getline(is, line)) std::cout << "  | " << line << "\n";
        return false;
    }
    return true;
}

Tensord random_tensor(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                      Rng& rng) {
    Tensord t(n, c, h, w);
    for (double& v : t.data) v = rng.normal();
    return t;
}

double inner(const Tensord& a, const Tensord& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

// ---- criterion 1: gradient suite --------------------------------------

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_op;
    auto track = [&](const char* op, double err) {
        if (err > worst) {
            worst = err;
            worst_op = op;
        }
    };
    Rng rng(101);

    // conv2d (input, kernel, bias), both padding modes
    for (const Padding pad : {Padding::same, Padding::valid}) {
        Tensord x = random_tensor(2, 3, 6, 6, rng);
        Tensord k = random_tensor(2, 3, 3, 3, rng);
        Tensord bias(1, 2, 1, 1);
        bias.data = {0.1, -0.2};
        const std::int64_t oh = pad == Padding::same ? 6 : 4;
        const Tensord w = random_tensor(2, 2, oh, oh, rng);
        std::span<const double> bspan(bias.data.data(), bias.data.size());
        const auto g = conv2d_adjoint(x, k, w, pad);
        Tensord gbias(1, 2, 1, 1);
        gbias.data = {g.bias[0], g.bias[1]};
        auto scalar = [&] {
            std::span<const double> bs(bias.data.data(), bias.data.size());
            return inner(w, conv2d(x, k, bs, pad));
        };
        std::vector<FlatParamView> views{view_of(x, g.input, "x"), view_of(k, g.kernel, "k"),
                                         view_of(bias, gbias, "b")};
        track("conv2d", finite_diff_check(scalar, views).max_rel_err);
    }

    // transposed conv
    {
        Tensord x = random_tensor(1, 3, 4, 4, rng);
        Tensord k = random_tensor(3, 2, 2, 2, rng);
        const Tensord w = random_tensor(1, 2, 8, 8, rng);
        const auto g = transposed_conv2d_adjoint(x, k, w);
        auto scalar = [&] { return inner(w, transposed_conv2d(x, k)); };
        std::vector<FlatParamView> views{view_of(x, g.input, "x"), view_of(k, g.kernel, "k")};
        track("transposed_conv2d", finite_diff_check(scalar, views).max_rel_err);
    }

    // relu (resampled away from kinks)
    {
        Tensord x(1, 2, 6, 6);
        do {
            for (double& v : x.data) v = rng.normal();
        } while ([&] {
            for (double v : x.data) {
                if (std::abs(v) < 1e-4) return true;
            }
            return false;
        }());
        const Tensord w = random_tensor(1, 2, 6, 6, rng);
        const Tensord g = relu_adjoint(x, w);
        Tensord gx = g;
        auto scalar = [&] { return inner(w, relu(x)); };
        std::vector<FlatParamView> views{view_of(x, gx, "x")};
        track("relu", finite_diff_check(scalar, views).max_rel_err);
    }

    // maxpool (random values: ties have measure zero, FD step below gaps)
    {
        Tensord x = random_tensor(1, 2, 4, 4, rng);
        const Tensord w = random_tensor(1, 2, 2, 2, rng);
        const auto res = maxpool2x2(x);
        const Tensord g = maxpool2x2_adjoint(res.argmax, 1, 2, 4, 4, w);
        Tensord gx = g;
        auto scalar = [&] { return inner(w, maxpool2x2(x).output); };
        std::vector<FlatParamView> views{view_of(x, gx, "x")};
        track("maxpool2x2", finite_diff_check(scalar, views).max_rel_err);
    }

    // sigmoid
    {
        Tensord x = random_tensor(1, 1, 6, 6, rng);
        const Tensord w = random_tensor(1, 1, 6, 6, rng);
        const Tensord out = sigmoid(x);
        const Tensord g = sigmoid_adjoint(out, w);
        Tensord gx = g;
        auto scalar = [&] { return inner(w, sigmoid(x)); };
        std::vector<FlatParamView> views{view_of(x, gx, "x")};
        track("sigmoid", finite_diff_check(scalar, views).max_rel_err);
    }

    // concat
    {
        Tensord a = random_tensor(1, 2, 4, 4, rng);
        Tensord b = random_tensor(1, 3, 4, 4, rng);
        const Tensord w = random_tensor(1, 5, 4, 4, rng);
        auto [ga, gb] = split_channels(w, 2, 3);
        auto scalar = [&] { return inner(w, concat_channels(a, b)); };
        std::vector<FlatParamView> views{view_of(a, ga, "a"), view_of(b, gb, "b")};
        track("concat_channels", finite_diff_check(scalar, views).max_rel_err);
    }

    // soft Dice gradient
    {
        Tensord p(1, 1, 6, 6), g(1, 1, 6, 6);
        for (double& v : p.data) v = rng.uniform();
        for (double& v : g.data) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
        const auto res = soft_dice_loss(p, g, 1.0);
        Tensord grad = res.grad_pred;
        auto scalar = [&] { return soft_dice_loss(p, g, 1.0).loss; };
        std::vector<FlatParamView> views{view_of(p, grad, "pred")};
        track("soft_dice_loss", finite_diff_check(scalar, views).max_rel_err);
    }

    const double elapsed = seconds_since(t0);
    const bool ok = worst < 1e-5 && elapsed < 120.0;
    std::ostringstream detail;
    detail << "max rel err " << worst << " (worst: " << worst_op << "), " << elapsed << " s";
    report(1, "layer adjoints and soft-Dice gradient vs central finite differences", ok,
           detail.str());
}

// ---- criterion 2: architecture constraint ------------------------------

void criterion_architecture() {
    StackNetConfig cfg;
    cfg.channel_widths = {2, 3, 4, 5};
    cfg.input_h = cfg.input_w = 8;
    bool ok = true;
    std::ostringstream detail;

    cfg.stack_depth_L = 5;
    for (const int r : {3, 5}) {
        cfg.kernel_r = r;
        const int layers = StackNetF(cfg).layer_count();
        ok = ok && layers == 24;
        detail << "L=5 r=" << r << " -> " << layers << "; ";
    }
    cfg.kernel_r = 3;
    for (int depth = 1; depth <= 6; ++depth) {
        cfg.stack_depth_L = depth;
        ok = ok && StackNetF(cfg).layer_count() == 14 + 2 * depth;
    }
    detail << "L=1..6 follow 14+2L";
    report(2, "24 conv/deconv layers at L=5 and the 14+2L count", ok, detail.str());
}

// ---- criterion 3: aggregation exactness --------------------------------

void criterion_aggregation() {
    Rng rng(103);
    bool ok = true;

    for (int trial = 0; trial < 20 && ok; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(5);
        std::vector<Volume> vols;
        for (std::size_t i = 0; i < n; ++i) {
            Volume v(7, 6, 5, VolumeKind::probability);
            for (float& x : v.data) x = static_cast<float>(rng.uniform());
            vols.push_back(std::move(v));
        }
        const Volume mean = aggregate_probs(vols);
        // independent per-voxel recomputation: fixed-order 64-bit sum / n
        for (std::size_t i = 0; i < mean.data.size() && ok; ++i) {
            double acc = 0.0;
            for (const Volume& v : vols) acc += static_cast<double>(v.data[i]);
            const float expected = static_cast<float>(acc / static_cast<double>(n));
            ok = mean.data[i] == expected;
        }
    }

    // mean of identical copies is exact
    Volume v(5, 5, 3, VolumeKind::probability);
    for (float& x : v.data) x = static_cast<float>(rng.uniform());
    for (const std::size_t k : {2u, 3u, 7u}) {
        ok = ok && aggregate_probs(std::vector<Volume>(k, v)).data == v.data;
    }

    // inclusive 0.4 threshold
    Volume probe(2, 1, 1, VolumeKind::probability);
    probe.data = {0.4f, 0.39f};
    const Volume mask = binarize(probe, 0.4);
    ok = ok && mask.data[0] == 1.0f && mask.data[1] == 0.0f;

    report(3, "bit-exact probability averaging and inclusive 0.4 threshold", ok,
           ok ? "20 random ensembles + copy fusion + boundary rule" : "mismatch found");
}

// ---- criterion 4: metrics vs independent oracles ------------------------

struct OracleUF {
    std::vector<std::int64_t> parent;
    explicit OracleUF(std::int64_t n) : parent(static_cast<std::size_t>(n)) {
        for (std::int64_t i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    }
    std::int64_t find(std::int64_t i) {
        while (parent[static_cast<std::size_t>(i)] != i) {
            i = parent[static_cast<std::size_t>(i)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        }
        return i;
    }
    void unite(std::int64_t a, std::int64_t b) {
        parent[static_cast<std::size_t>(find(a))] = find(b);
    }
};

std::vector<std::int64_t> oracle_roots(const Volume& mask) {
    OracleUF uf(mask.numel());
    for (std::int64_t z = 0; z < mask.nz; ++z) {
        for (std::int64_t y = 0; y < mask.ny; ++y) {
            for (std::int64_t x = 0; x < mask.nx; ++x) {
                const std::int64_t i = x + mask.nx * (y + mask.ny * z);
                if (mask.data[static_cast<std::size_t>(i)] == 0.0f) continue;
                for (int dz = -1; dz <= 1; ++dz) {
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (dx == 0 && dy == 0 && dz == 0) continue;
                            const std::int64_t x2 = x + dx, y2 = y + dy, z2 = z + dz;
                            if (x2 < 0 || x2 >= mask.nx || y2 < 0 || y2 >= mask.ny ||
                                z2 < 0 || z2 >= mask.nz) {
                                continue;
                            }
                            const std::int64_t j = x2 + mask.nx * (y2 + mask.ny * z2);
                            if (mask.data[static_cast<std::size_t>(j)] != 0.0f) {
                                uf.unite(i, j);
                            }
                        }
                    }
                }
            }
        }
    }
    std::vector<std::int64_t> roots(mask.data.size(), -1);
    for (std::int64_t i = 0; i < mask.numel(); ++i) {
        if (mask.data[static_cast<std::size_t>(i)] != 0.0f) {
            roots[static_cast<std::size_t>(i)] = uf.find(i);
        }
    }
    return roots;
}

void criterion_metrics_oracle() {
    Rng rng(104);
    bool ok = true;
    std::string failure;

    for (int trial = 0; trial < 1000 && ok; ++trial) {
        Volume g(16, 16, 8, VolumeKind::binary_mask);
        Volume p(16, 16, 8, VolumeKind::binary_mask);
        const double dg = rng.uniform(0.02, 0.45), dp = rng.uniform(0.02, 0.45);
        for (float& v : g.data) v = rng.uniform() < dg ? 1.0f : 0.0f;
        for (float& v : p.data) v = rng.uniform() < dp ? 1.0f : 0.0f;

        // labeling vs union-find partition
        const auto gc = label_components_3d(g);
        const auto pc = label_components_3d(p);
        const auto gr = oracle_roots(g);
        const auto pr = oracle_roots(p);
        auto partitions_equal = [](const LesionComponents& c,
                                   const std::vector<std::int64_t>& roots) {
            std::map<std::int32_t, std::int64_t> l2r;
            std::map<std::int64_t, std::int32_t> r2l;
            std::map<std::int32_t, std::int64_t> sizes;
            for (std::size_t i = 0; i < roots.size(); ++i) {
                if ((c.labels[i] != 0) != (roots[i] >= 0)) return false;
                if (c.labels[i] == 0) continue;
                ++sizes[c.labels[i]];
                auto a = l2r.emplace(c.labels[i], roots[i]);
                auto b = r2l.emplace(roots[i], c.labels[i]);
                if (a.first->second != roots[i] || b.first->second != c.labels[i]) {
                    return false;
                }
            }
            if (static_cast<std::size_t>(c.count) != l2r.size()) return false;
            for (std::int32_t l = 1; l <= c.count; ++l) {
                if (c.voxel_counts[static_cast<std::size_t>(l - 1)] != sizes[l]) return false;
            }
            return true;
        };
        if (!partitions_equal(gc, gr) || !partitions_equal(pc, pr)) {
            ok = false;
            failure = "labeling mismatch at trial " + std::to_string(trial);
            break;
        }

        // dice vs direct counting
        std::int64_t inter = 0, sg = 0, sp = 0;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            sg += g.data[i] != 0.0f;
            sp += p.data[i] != 0.0f;
            inter += g.data[i] != 0.0f && p.data[i] != 0.0f;
        }
        const double dice_ref =
            sg + sp == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sg + sp);
        if (dice_score(g, p) != dice_ref) {
            ok = false;
            failure = "dice mismatch at trial " + std::to_string(trial);
            break;
        }

        // recall / f1 vs set-based counting over oracle roots
        std::set<std::int64_t> g_hit, p_hit, g_all, p_all;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (gr[i] >= 0) g_all.insert(gr[i]);
            if (pr[i] >= 0) p_all.insert(pr[i]);
            if (gr[i] >= 0 && pr[i] >= 0) {
                g_hit.insert(gr[i]);
                p_hit.insert(pr[i]);
            }
        }
        if (!g_all.empty()) {
            const double recall_ref =
                static_cast<double>(g_hit.size()) / static_cast<double>(g_all.size());
            if (lesion_recall(gc, pc) != recall_ref) {
                ok = false;
                failure = "recall mismatch at trial " + std::to_string(trial);
                break;
            }
        }
        if (!p_all.empty()) {
            const double f1_ref =
                static_cast<double>(p_hit.size()) / static_cast<double>(p_all.size());
            if (lesion_f1(gc, pc, F1Mode::paper_literal) != f1_ref) {
                ok = false;
                failure = "f1 mismatch at trial " + std::to_string(trial);
                break;
            }
        }
    }
    report(4, "labeling, Dice, lesion recall and F1 vs flood-fill/counting oracles", ok,
           ok ? "1000 random 16x16x8 mask pairs, exact agreement" : failure);
}

// ---- criterion 5: analytic loss value ----------------------------------

void criterion_analytic_loss() {
    Tensord p(4, 1, 16, 16, 0.5);
    Tensord g(4, 1, 16, 16, 1.0);
    const auto res = soft_dice_loss(p, g, 0.0);
    const bool ok = std::abs(res.dice - 0.8) < 1e-9 && std::abs(res.loss - 0.2) < 1e-9;
    std::ostringstream detail;
    detail << "dice " << res.dice << ", loss " << res.loss;
    report(5, "p=0.5 vs g=1 at smooth->0 gives Dice 0.8 / loss 0.2", ok, detail.str());
}

// ---- criterion 6: protocol fidelity ------------------------------------

void criterion_protocol() {
    bool ok = true;
    std::vector<SubjectKey> subjects;
    for (int c = 0; c < 3; ++c) {
        for (int s = 0; s < 20; ++s) {
            subjects.push_back({"c" + std::to_string(c) + "s" + std::to_string(s),
                                "center" + std::to_string(c)});
        }
    }
    const auto folds = split_folds(subjects, 5, 2026);
    ok = ok && folds.size() == 5;
    for (const FoldSplit& f : folds) {
        ok = ok && f.train.size() == 48 && f.test.size() == 12;
        for (int c = 0; c < 3; ++c) {
            const std::string prefix = "c" + std::to_string(c) + "s";
            std::int64_t train_n = 0, test_n = 0;
            for (const auto& id : f.train) train_n += id.rfind(prefix, 0) == 0;
            for (const auto& id : f.test) test_n += id.rfind(prefix, 0) == 0;
            ok = ok && train_n == 16 && test_n == 4;
        }
    }

    LesionComponents comps;
    comps.voxel_counts = {1, 9, 10, 15, 20, 21, 100};
    comps.count = 7;
    const auto h = size_histogram(comps);
    ok = ok && h.small == 2 && h.medium == 3 && h.large == 2;

    report(6, "subject-wise 5-fold split (48/12, 16/4 per center) and size bin edges", ok,
           ok ? "all folds and bins as specified" : "protocol mismatch");
}

// ---- criterion 7: end-to-end desk-scale run ------------------------------

void criterion_end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::ostringstream detail;

    // overfit-one-batch monotonicity (in-process part of this criterion)
    {
        StackNetConfig cfg;
        cfg.kernel_r = 3;
        cfg.stack_depth_L = 2;
        cfg.channel_widths = {8, 12, 16, 32};
        cfg.input_h = cfg.input_w = 8;
        cfg.seed = 11;
        StackNetF model(cfg);
        Adam<float> opt(model.params());
        Tensorf img(1, 2, 8, 8);
        Tensorf mask(1, 1, 8, 8);
        Rng rng(12);
        for (std::int64_t y = 0; y < 8; ++y) {
            for (std::int64_t x = 0; x < 8; ++x) {
                const bool fg = y >= 2 && y <= 5 && x >= 3 && x <= 6;
                img.at(0, 0, y, x) = (fg ? 2.0f : -0.5f) + 0.1f * (float)rng.normal();
                img.at(0, 1, y, x) = (fg ? -1.0f : 0.5f) + 0.1f * (float)rng.normal();
                mask.at(0, 0, y, x) = fg ? 1.0f : 0.0f;
            }
        }
        TrainConfig tcfg;
        tcfg.learning_rate = 1e-3;
        std::vector<double> losses;
        for (int step = 0; step < 200; ++step) {
            losses.push_back(train_on_batch(model, opt, img, mask, tcfg));
        }
        bool monotone = true;
        for (std::size_t i = 0; i + 50 < losses.size(); ++i) {
            monotone = monotone && losses[i + 50] < losses[i];
        }
        ok = ok && monotone;
        detail << (monotone ? "overfit windows monotone; " : "overfit windows NOT monotone; ");
    }

    // CLI pipeline: synth -> train r3 -> train r5 -> ensemble -> evaluate
    const fs::path dir = g_workdir / "e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string data = (dir / "data").string();
    const std::string m3 = (dir / "m3.snet").string();
    const std::string m5 = (dir / "m5.snet").string();
    const std::string ens = (dir / "ens").string();
    const std::string eva = (dir / "eval").string();
    const std::string manifest = data + "/manifest.json";
    const std::string train_opts =
        " --target 96x96 --widths 8,12,16,32 --depth 2 --epochs 5 --batch-size 12"
        " --lr 0.004";

    ok = ok &&
         run_cli("synth --out " + data +
                     " --subjects 12 --centers 3 --dims 96x96x16 --small 8 --medium 4"
                     " --large 2 --seed 7",
                 "e2e_synth.log");
    ok = ok && run_cli("train --manifest " + manifest + " --out " + m3 +
                           " --kernel 3 --seed 1 --model-seed 1" + train_opts,
                       "e2e_train3.log");
    ok = ok && run_cli("train --manifest " + manifest + " --out " + m5 +
                           " --kernel 5 --seed 2 --model-seed 2" + train_opts,
                       "e2e_train5.log");
    ok = ok && run_cli("ensemble --models " + m3 + "," + m5 + " --manifest " + manifest +
                           " --out " + ens + " --threshold 0.4",
                       "e2e_ensemble.log");
    ok = ok && run_cli("evaluate --manifest " + manifest + " --pred " + ens + " --out " + eva,
                       "e2e_evaluate.log");

    // schema-valid per-subject reports and summary, train-set Dice > 0.5
    double mean_dice = 0.0;
    if (ok) {
        try {
            int subject_reports = 0;
            for (int s = 0; s < 12; ++s) {
                char id[8];
                std::snprintf(id, sizeof(id), "s%03d", s);
                std::ifstream is((fs::path(eva) / (std::string(id) + "_metrics.json")));
                if (!is) throw IoError("missing metrics report for " + std::string(id));
                std::stringstream buf;
                buf << is.rdbuf();
                const MetricsReport rep = parse_metrics_json(buf.str());
                if (rep.sizes.total() > rep.gt_sizes.total()) {
                    throw ValueError("detected histogram exceeds ground truth");
                }
                ++subject_reports;
            }
            std::ifstream is(fs::path(eva) / "summary.json");
            json summary;
            is >> summary;
            mean_dice = summary.at("mean_dice").get<double>();
            ok = ok && subject_reports == 12 && summary.at("subjects").get<int>() == 12;
        } catch (const std::exception& e) {
            ok = false;
            detail << "report validation failed: " << e.what() << "; ";
        }
    }
    ok = ok && mean_dice > 0.5;

    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 600.0;
    detail << "train-set mean Dice " << mean_dice << ", " << elapsed << " s";
    report(7, "12-phantom desk-scale two-model pipeline through evaluate", ok, detail.str());
}

// ---- criterion 8: depth sweep harness ------------------------------------

void criterion_depth_sweep() {
    bool ok = true;
    std::ostringstream detail;
    const fs::path dir = g_workdir / "sweep";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string data = (dir / "data").string();
    const std::string report_path = (dir / "sweep.json").string();

    ok = ok && run_cli("synth --out " + data +
                           " --subjects 3 --centers 3 --dims 48x48x8 --small 4 --medium 2"
                           " --large 1 --seed 21",
                       "sweep_synth.log");
    ok = ok && run_cli("depth-sweep --manifest " + data + "/manifest.json" +
                           " --depths 1,2,3,4,5,6 --kernel 3 --widths 4,6,8,12"
                           " --target 48x48 --epochs 1 --batch-size 8 --lr 0.01 --seed 5"
                           " --model-seed 5 --out " +
                           report_path,
                       "sweep_run.log");
    if (ok) {
        try {
            std::ifstream is(report_path);
            json doc;
            is >> doc;
            const auto& rows = doc.at("rows");
            ok = ok && rows.size() == 6;
            int expected_depth = 1;
            for (const auto& row : rows) {
                const int depth = row.at("depth").get<int>();
                ok = ok && depth == expected_depth++;
                ok = ok && row.at("layer_count").get<int>() == 14 + 2 * depth;
                ok = ok && row.at("dice").is_number();
                ok = ok && row.at("lesion_recall").is_number();
                ok = ok && row.contains("lesion_f1");
            }
            detail << "6 rows x 3 metrics, layer counts follow 14+2L";
        } catch (const std::exception& e) {
            ok = false;
            detail << "report validation failed: " << e.what();
        }
    } else {
        detail << "CLI run failed";
    }
    report(8, "depth sweep 1..6 emits the 6-row x 3-metric report", ok, detail.str());
}

// ---- criterion 9: NIfTI round-trip and robustness -------------------------

void criterion_nifti() {
    Rng rng(109);
    bool ok = true;
    std::string failure;

    // voxel-exact round trips
    for (const auto dt : {NiftiDataType::uint8, NiftiDataType::int16, NiftiDataType::float32}) {
        Volume v(6, 5, 4, dt == NiftiDataType::uint8 ? VolumeKind::binary_mask
                                                     : VolumeKind::intensity);
        for (float& x : v.data) {
            switch (dt) {
                case NiftiDataType::uint8: x = rng.uniform() < 0.5 ? 1.0f : 0.0f; break;
                case NiftiDataType::int16: x = std::floor(rng.uniform(-500.0, 500.0)); break;
                case NiftiDataType::float32: x = static_cast<float>(rng.normal()); break;
            }
        }
        const Volume back = read_nifti(write_nifti(v, dt), v.kind);
        if (back.data != v.data || !back.same_dims(v)) {
            ok = false;
            failure = "round-trip mismatch";
        }
    }

    // field-specific errors
    {
        Volume v(3, 3, 3, VolumeKind::intensity, 1.0f);
        auto bytes = write_nifti(v, NiftiDataType::float32);
        auto expect_field = [&](std::vector<std::uint8_t> mutated, const std::string& field) {
            try {
                (void)read_nifti(mutated);
                ok = false;
                failure = "accepted malformed " + field;
            } catch (const ParseError& e) {
                if (e.field() != field) {
                    ok = false;
                    failure = "wrong field for " + field + ": got " + e.field();
                }
            }
        };
        auto m1 = bytes;
        m1[344] = 'q';
        expect_field(m1, "magic");
        auto m2 = bytes;
        m2[70] = 64;
        expect_field(m2, "datatype");
        auto m3 = bytes;
        m3[72] = 16;
        expect_field(m3, "bitpix");
        auto m4 = bytes;
        m4[40] = 9;
        expect_field(m4, "dim");
    }

    // fuzzed truncation: every cut point parses to an error, no crash
    {
        Volume v(4, 4, 2, VolumeKind::intensity, 2.0f);
        const auto bytes = write_nifti(v, NiftiDataType::int16);
        for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
            std::vector<std::uint8_t> trunc(bytes.begin(),
                                            bytes.begin() + static_cast<std::ptrdiff_t>(cut));
            try {
                (void)read_nifti(trunc);
                ok = false;
                failure = "accepted truncation at " + std::to_string(cut);
            } catch (const ParseError&) {
            }
        }
    }

    report(9, "NIfTI voxel-exact round-trip, field-specific errors, truncation fuzz", ok,
           ok ? "uint8/int16/float32 exact; all malformed fixtures rejected" : failure);
}

// ---- criterion 10: paired Z-test -----------------------------------------

double simpson_rec(double a, double b, double fa, double fm, double fb, double eps,
                   int depth) {
    auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = pdf(lm), frm = pdf(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson_rec(a, m, fa, flm, fm, eps / 2.0, depth - 1) +
           simpson_rec(m, b, fm, frm, fb, eps / 2.0, depth - 1);
}

void criterion_ztest() {
    Rng rng(110);
    bool ok = true;
    double worst = 0.0;
    auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };

    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(60), b(60);
        for (int i = 0; i < 60; ++i) {
            a[static_cast<std::size_t>(i)] = rng.uniform();
            b[static_cast<std::size_t>(i)] = rng.uniform();
        }
        const auto res = paired_z_test(a, b);
        const double za = std::abs(res.z);
        const double integral = simpson_rec(0.0, za, pdf(0.0), pdf(za / 2.0), pdf(za),
                                            1e-13, 40);
        const double p_ref = 2.0 * (0.5 - integral);
        worst = std::max(worst, std::abs(res.p_two_sided - p_ref));
    }
    ok = ok && worst < 1e-9;

    bool degenerate_ok = false;
    try {
        const std::vector<double> same{0.25, 0.5, 0.75};
        (void)paired_z_test(same, same);
    } catch (const DegenerateInputError&) {
        degenerate_ok = true;
    }
    ok = ok && degenerate_ok;

    std::ostringstream detail;
    detail << "max |p - p_ref| " << worst << " over 50 random n=60 draws; zero-variance "
           << (degenerate_ok ? "rejected" : "NOT rejected");
    report(10, "paired Z-test vs quadrature normal-CDF oracle", ok, detail.str());
}

} // namespace

int main(int argc, char** argv) {
    const char* env = std::getenv("STACKNET_CLI");
    if (argc > 1) {
        g_cli_path = argv[1];
    } else if (env != nullptr) {
        g_cli_path = env;
    } else {
        g_cli_path = "tools/stacknet_cli";
    }
    if (!fs::exists(g_cli_path)) {
        std::cerr << "CLI binary not found at '" << g_cli_path
                  << "' (set STACKNET_CLI or pass the path as argv[1])\n";
        return 99;
    }
    g_workdir = fs::temp_directory_path() / "stacknet_acceptance";
    fs::create_directories(g_workdir);

    criterion_gradients();
    criterion_architecture();
    criterion_aggregation();
    criterion_metrics_oracle();
    criterion_analytic_loss();
    criterion_protocol();
    criterion_end_to_end();
    criterion_depth_sweep();
    criterion_nifti();
    criterion_ztest();

    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                  : std::to_string(g_failures) + " CRITERIA FAILED")
              << "\n";
    return g_failures;
}
