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

#include "stacknet/folds.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "stacknet/errors.hpp"
#include "stacknet/rng.hpp"

namespace stacknet {

std::vector<FoldSplit> split_folds(const std::vector<SubjectKey>& subjects, int k,
                                   std::uint64_t seed) {
    if (k < 2) throw ConfigError("split_folds: k must be >= 2, got " + std::to_string(k));
    if (subjects.empty()) throw ConfigError("split_folds: no subjects");

    std::map<std::string, std::vector<std::string>> by_center;
    std::set<std::string> seen;
    for (const SubjectKey& s : subjects) {
        if (!seen.insert(s.id).second) {
            throw ConfigError("split_folds: duplicate subject id '" + s.id + "'");
        }
        by_center[s.center].push_back(s.id);
    }

    std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
    for (auto& [center, ids] : by_center) {
        if (ids.size() % static_cast<std::size_t>(k) != 0) {
            throw ConfigError("split_folds: center '" + center + "' has " +
                              std::to_string(ids.size()) + " subjects, not divisible by k=" +
                              std::to_string(k));
        }
        // Order-independent: sort, then one seeded shuffle per center.
        std::sort(ids.begin(), ids.end());
        Rng rng(mix_seed(seed, hash_str(center)));
        rng.shuffle(ids);

        const std::size_t per_fold = ids.size() / static_cast<std::size_t>(k);
        for (int f = 0; f < k; ++f) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const bool in_test = i / per_fold == static_cast<std::size_t>(f);
                auto& side = in_test ? folds[static_cast<std::size_t>(f)].test
                                     : folds[static_cast<std::size_t>(f)].train;
                side.push_back(ids[i]);
            }
        }
    }
    return folds;
}

} // namespace stacknet
