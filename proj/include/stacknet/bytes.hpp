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

#ifndef STACKNET_BYTES_HPP
#define STACKNET_BYTES_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <type_traits>
#include <vector>

namespace stacknet {

/// Little-endian scalar I/O on byte buffers, independent of host order.

template <typename T>
inline T byteswap_scalar(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    T out;
    std::memcpy(&out, b, sizeof(T));
    return out;
}

template <typename T>
inline T read_le(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) v = byteswap_scalar(v);
    return v;
}

template <typename T>
inline void write_le(std::uint8_t* p, T v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap_scalar(v);
    std::memcpy(p, &v, sizeof(T));
}

template <typename T>
inline void append_le(std::vector<std::uint8_t>& buf, T v) {
    const std::size_t at = buf.size();
    buf.resize(at + sizeof(T));
    write_le(buf.data() + at, v);
}

} // namespace stacknet

#endif // STACKNET_BYTES_HPP
