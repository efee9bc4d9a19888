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

#ifndef STACKNET_FOLDS_HPP
#define STACKNET_FOLDS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace stacknet {

struct SubjectKey {
    std::string id;
    std::string center;
};

struct FoldSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
};

/// Subject-wise k-fold partition stratified by center: every fold holds
/// count/k test subjects from each center and the rest for training. All
/// slices of a subject stay on one side by construction. The split is a
/// pure function of (subjects, k, seed), independent of input order.
std::vector<FoldSplit> split_folds(const std::vector<SubjectKey>& subjects, int k,
                                   std::uint64_t seed);

} // namespace stacknet

#endif // STACKNET_FOLDS_HPP
