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

#include "stacknet/nifti.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "stacknet/bytes.hpp"
#include "stacknet/errors.hpp"

namespace stacknet {

namespace {

// NIfTI-1 header field offsets (348-byte header).
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;      // short dim[8]
constexpr std::size_t kOffDatatype = 70; // short
constexpr std::size_t kOffBitpix = 72;   // short
constexpr std::size_t kOffPixdim = 76;   // float pixdim[8]
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffMagic = 344;
constexpr std::size_t kHeaderSize = 348;
constexpr std::int32_t kSizeofHdr = 348;

struct FieldReader {
    std::span<const std::uint8_t> bytes;
    bool swapped = false;

    template <typename T>
    T get(std::size_t off) const {
        T v = read_le<T>(bytes.data() + off);
        if (swapped) v = byteswap_scalar(v);
        return v;
    }
};

int bitpix_for(NiftiDataType dt) {
    switch (dt) {
        case NiftiDataType::uint8: return 8;
        case NiftiDataType::int16: return 16;
        case NiftiDataType::float32: return 32;
    }
    return 0;
}

} // namespace

Volume read_nifti(std::span<const std::uint8_t> bytes, VolumeKind kind) {
    if (bytes.size() < kHeaderSize) {
        throw ParseError("header", bytes.size(),
                         "truncated: need 348 header bytes, have " +
                             std::to_string(bytes.size()));
    }

    FieldReader f{bytes, false};
    const std::int32_t raw_sizeof = f.get<std::int32_t>(kOffSizeofHdr);
    if (raw_sizeof == kSizeofHdr) {
        f.swapped = false;
    } else if (byteswap_scalar(raw_sizeof) == kSizeofHdr) {
        f.swapped = true;
    } else {
        throw ParseError("sizeof_hdr", kOffSizeofHdr,
                         "expected 348 in either byte order, got " +
                             std::to_string(raw_sizeof));
    }

    const char m0 = static_cast<char>(bytes[kOffMagic]);
    const char m1 = static_cast<char>(bytes[kOffMagic + 1]);
    const char m2 = static_cast<char>(bytes[kOffMagic + 2]);
    const char m3 = static_cast<char>(bytes[kOffMagic + 3]);
    if (m0 == 'n' && m1 == 'i' && m2 == '1' && m3 == '\0') {
        throw ParseError("magic", kOffMagic,
                         "two-file (.hdr/.img) NIfTI is not supported; expected \"n+1\"");
    }
    if (!(m0 == 'n' && m1 == '+' && m2 == '1' && m3 == '\0')) {
        throw ParseError("magic", kOffMagic, "expected \"n+1\"");
    }

    const std::int16_t ndim = f.get<std::int16_t>(kOffDim);
    if (ndim != 3 && ndim != 4) {
        throw ParseError("dim", kOffDim,
                         "expected a 3-D (or degenerate 4-D) volume, dim[0]=" +
                             std::to_string(ndim));
    }
    std::int64_t dims[3];
    for (int i = 0; i < 3; ++i) {
        const std::int16_t d = f.get<std::int16_t>(kOffDim + 2 * (i + 1));
        if (d < 1) {
            throw ParseError("dim", kOffDim + 2 * (i + 1),
                             "dim[" + std::to_string(i + 1) + "]=" + std::to_string(d) +
                                 " must be >= 1");
        }
        dims[i] = d;
    }
    if (ndim == 4) {
        const std::int16_t d4 = f.get<std::int16_t>(kOffDim + 8);
        if (d4 != 1) {
            throw ParseError("dim", kOffDim + 8,
                             "4-D volumes supported only with dim[4]=1, got " +
                                 std::to_string(d4));
        }
    }

    const std::int16_t dtype = f.get<std::int16_t>(kOffDatatype);
    if (dtype != static_cast<std::int16_t>(NiftiDataType::uint8) &&
        dtype != static_cast<std::int16_t>(NiftiDataType::int16) &&
        dtype != static_cast<std::int16_t>(NiftiDataType::float32)) {
        throw ParseError("datatype", kOffDatatype,
                         "unsupported datatype code " + std::to_string(dtype) +
                             " (supported: uint8=2, int16=4, float32=16)");
    }
    const NiftiDataType dt = static_cast<NiftiDataType>(dtype);

    const std::int16_t bitpix = f.get<std::int16_t>(kOffBitpix);
    if (bitpix != bitpix_for(dt)) {
        throw ParseError("bitpix", kOffBitpix,
                         "bitpix " + std::to_string(bitpix) + " does not match datatype " +
                             std::to_string(dtype));
    }

    const float vox_offset_f = f.get<float>(kOffVoxOffset);
    if (!(vox_offset_f >= static_cast<float>(kHeaderSize)) ||
        !(vox_offset_f <= 1e9f) || vox_offset_f != std::floor(vox_offset_f)) {
        throw ParseError("vox_offset", kOffVoxOffset,
                         "must be an integer >= 348, got " + std::to_string(vox_offset_f));
    }
    const std::size_t vox_offset = static_cast<std::size_t>(vox_offset_f);

    const float scl_slope = f.get<float>(kOffSclSlope);
    const float scl_inter = f.get<float>(kOffSclInter);
    if (!std::isfinite(scl_slope) || !std::isfinite(scl_inter)) {
        throw ParseError("scl_slope", kOffSclSlope,
                         "scaling fields must be finite");
    }

    const std::size_t nvox = static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
    const std::size_t payload = nvox * static_cast<std::size_t>(bitpix / 8);
    if (bytes.size() < vox_offset + payload) {
        throw ParseError("data", vox_offset,
                         "truncated payload: need " + std::to_string(payload) +
                             " bytes at offset " + std::to_string(vox_offset) + ", have " +
                             std::to_string(bytes.size() - std::min(bytes.size(), vox_offset)));
    }

    Volume vol(dims[0], dims[1], dims[2], kind);
    for (int i = 0; i < 3; ++i) {
        float sp = std::abs(f.get<float>(kOffPixdim + 4 * (i + 1)));
        vol.spacing[static_cast<std::size_t>(i)] = sp > 0.0f ? sp : 1.0f;
    }

    const std::uint8_t* p = bytes.data() + vox_offset;
    const bool scale = scl_slope != 0.0f && !(scl_slope == 1.0f && scl_inter == 0.0f);
    for (std::size_t i = 0; i < nvox; ++i) {
        float v = 0.0f;
        switch (dt) {
            case NiftiDataType::uint8:
                v = static_cast<float>(p[i]);
                break;
            case NiftiDataType::int16: {
                std::int16_t raw = read_le<std::int16_t>(p + 2 * i);
                if (f.swapped) raw = byteswap_scalar(raw);
                v = static_cast<float>(raw);
                break;
            }
            case NiftiDataType::float32: {
                float raw = read_le<float>(p + 4 * i);
                if (f.swapped) raw = byteswap_scalar(raw);
                v = raw;
                break;
            }
        }
        if (scale) v = scl_slope * v + scl_inter;
        vol.data[i] = v;
    }

    if (kind == VolumeKind::binary_mask) {
        vol.check_binary("read_nifti");
    } else if (kind == VolumeKind::probability) {
        for (float v : vol.data) {
            if (!(v >= 0.0f && v <= 1.0f)) {
                throw ValueError("read_nifti: probability voxels must lie in [0,1]");
            }
        }
    }
    return vol;
}

Volume read_nifti_file(const std::string& path, VolumeKind kind) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open NIfTI file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return read_nifti(bytes, kind);
}

std::vector<std::uint8_t> write_nifti(const Volume& vol, NiftiDataType dtype) {
    if (vol.nx < 1 || vol.ny < 1 || vol.nz < 1) {
        throw DimensionError("write_nifti: empty volume " + vol.dims_str());
    }
    if (vol.nx > 32767 || vol.ny > 32767 || vol.nz > 32767) {
        throw DimensionError("write_nifti: dims exceed int16 range: " + vol.dims_str());
    }

    if (dtype == NiftiDataType::uint8 && vol.kind == VolumeKind::binary_mask) {
        vol.check_binary("write_nifti");
    }
    if (dtype == NiftiDataType::uint8 || dtype == NiftiDataType::int16) {
        const float lo = dtype == NiftiDataType::uint8 ? 0.0f : -32768.0f;
        const float hi = dtype == NiftiDataType::uint8 ? 255.0f : 32767.0f;
        for (float v : vol.data) {
            if (v != std::floor(v) || v < lo || v > hi) {
                throw ValueError("write_nifti: value " + std::to_string(v) +
                                 " not representable in target integer datatype");
            }
        }
    }

    const std::size_t nvox = static_cast<std::size_t>(vol.numel());
    const std::size_t voxsize = static_cast<std::size_t>(bitpix_for(dtype) / 8);
    std::vector<std::uint8_t> buf(352 + nvox * voxsize, 0);

    write_le<std::int32_t>(buf.data() + kOffSizeofHdr, kSizeofHdr);
    write_le<std::int16_t>(buf.data() + kOffDim, 3);
    write_le<std::int16_t>(buf.data() + kOffDim + 2, static_cast<std::int16_t>(vol.nx));
    write_le<std::int16_t>(buf.data() + kOffDim + 4, static_cast<std::int16_t>(vol.ny));
    write_le<std::int16_t>(buf.data() + kOffDim + 6, static_cast<std::int16_t>(vol.nz));
    for (int i = 4; i < 8; ++i) {
        write_le<std::int16_t>(buf.data() + kOffDim + 2 * i, 1);
    }
    write_le<std::int16_t>(buf.data() + kOffDatatype, static_cast<std::int16_t>(dtype));
    write_le<std::int16_t>(buf.data() + kOffBitpix,
                           static_cast<std::int16_t>(bitpix_for(dtype)));
    write_le<float>(buf.data() + kOffPixdim, 1.0f);
    for (int i = 0; i < 3; ++i) {
        write_le<float>(buf.data() + kOffPixdim + 4 * (i + 1),
                        vol.spacing[static_cast<std::size_t>(i)]);
    }
    for (int i = 4; i < 8; ++i) write_le<float>(buf.data() + kOffPixdim + 4 * i, 0.0f);
    write_le<float>(buf.data() + kOffVoxOffset, 352.0f);
    write_le<float>(buf.data() + kOffSclSlope, 1.0f);
    write_le<float>(buf.data() + kOffSclInter, 0.0f);
    buf[kOffMagic] = 'n';
    buf[kOffMagic + 1] = '+';
    buf[kOffMagic + 2] = '1';
    buf[kOffMagic + 3] = '\0';
    // bytes 348..351 stay zero: no header extension.

    std::uint8_t* p = buf.data() + 352;
    for (std::size_t i = 0; i < nvox; ++i) {
        switch (dtype) {
            case NiftiDataType::uint8:
                p[i] = static_cast<std::uint8_t>(vol.data[i]);
                break;
            case NiftiDataType::int16:
                write_le<std::int16_t>(p + 2 * i, static_cast<std::int16_t>(vol.data[i]));
                break;
            case NiftiDataType::float32:
                write_le<float>(p + 4 * i, vol.data[i]);
                break;
        }
    }
    return buf;
}

void write_nifti_file(const Volume& vol, NiftiDataType dtype, const std::string& path) {
    const std::vector<std::uint8_t> bytes = write_nifti(vol, dtype);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open NIfTI file for writing: " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing NIfTI file: " + path);
}

} // namespace stacknet
