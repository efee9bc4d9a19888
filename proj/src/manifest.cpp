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

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "stacknet/errors.hpp"
#include "stacknet/nifti.hpp"
#include "stacknet/preprocess.hpp"

namespace stacknet {

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

} // namespace

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    nlohmann::json doc;
    try {
        is >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest", e.byte, e.what());
    }
    if (!doc.is_array()) {
        throw ParseError("manifest", 0, "expected a JSON array of subjects");
    }
    std::vector<ManifestEntry> entries;
    entries.reserve(doc.size());
    for (const auto& item : doc) {
        ManifestEntry e;
        try {
            e.subject_id = item.at("subject_id").get<std::string>();
            e.center = item.at("center").get<std::string>();
            e.flair_path = item.at("flair_path").get<std::string>();
            e.t1_path = item.at("t1_path").get<std::string>();
            if (item.contains("mask_path") && !item["mask_path"].is_null()) {
                e.mask_path = item["mask_path"].get<std::string>();
            }
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("manifest", 0,
                             "bad subject entry (" + std::string(ex.what()) + ")");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const ManifestEntry& e : entries) {
        nlohmann::json item{{"subject_id", e.subject_id},
                            {"center", e.center},
                            {"flair_path", e.flair_path},
                            {"t1_path", e.t1_path}};
        if (e.mask_path) item["mask_path"] = *e.mask_path;
        doc.push_back(std::move(item));
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot open manifest for writing: " + path);
    os << doc.dump(2) << "\n";
    if (!os) throw IoError("failed writing manifest: " + path);
}

SubjectRecord load_subject(const ManifestEntry& entry, const std::string& base_dir) {
    SubjectRecord rec;
    rec.subject_id = entry.subject_id;
    rec.center = entry.center;
    rec.flair = read_nifti_file(resolve(entry.flair_path, base_dir), VolumeKind::intensity);
    rec.t1 = read_nifti_file(resolve(entry.t1_path, base_dir), VolumeKind::intensity);
    if (entry.mask_path) {
        rec.gt_mask =
            read_nifti_file(resolve(*entry.mask_path, base_dir), VolumeKind::binary_mask);
    }
    if (!rec.flair.same_dims(rec.t1) ||
        (rec.gt_mask && !rec.flair.same_dims(*rec.gt_mask))) {
        throw DimensionError("subject " + entry.subject_id +
                             ": volumes disagree on dims (FLAIR " + rec.flair.dims_str() +
                             ", T1 " + rec.t1.dims_str() + ")");
    }
    return rec;
}

} // namespace stacknet
