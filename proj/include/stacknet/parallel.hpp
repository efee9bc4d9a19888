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

#ifndef STACKNET_PARALLEL_HPP
#define STACKNET_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace stacknet {

namespace detail {
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{0}; // 0 = use hardware concurrency
    return cap;
}
} // namespace detail

/// Caps the number of worker threads used by parallel_for. 0 restores the
/// hardware default. Results never depend on this value: every index is
/// processed independently and all reductions have a fixed order.
inline void set_max_threads(int n) { detail::thread_cap().store(n < 0 ? 0 : n); }

inline int max_threads() {
    const int cap = detail::thread_cap().load();
    if (cap > 0) return cap;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for every i in [begin, end), split into contiguous chunks
/// across worker threads. body must only write state owned by index i.
inline void parallel_for(std::int64_t begin, std::int64_t end,
                         const std::function<void(std::int64_t)>& body) {
    const std::int64_t count = end - begin;
    if (count <= 0) return;
    const int threads = std::min<std::int64_t>(max_threads(), count);
    if (threads <= 1) {
        for (std::int64_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const std::int64_t chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = begin + t * chunk;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::int64_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace stacknet

#endif // STACKNET_PARALLEL_HPP
