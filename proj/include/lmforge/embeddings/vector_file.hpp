// Copyright 2026-present the lmforge project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <vector>

#include "lmforge/embeddings/embeddings.hpp"
#include "lmforge/util/binary_io.hpp"

namespace lmforge {

// "LMFVEC1\0" | u32 version | u32 dim | u64 count | count*dim f32 (row-major)
// | u32 CRC32. The row block matches the vector block of an index file.
inline constexpr std::string_view kVectorMagic{"LMFVEC1\0", 8};
inline constexpr std::uint32_t kVectorFormatVersion = 1;

inline std::string serialize_vectors(std::span<const EmbeddingVector> vecs) {
    const std::size_t dim = vecs.empty() ? 0 : vecs.front().dim();
    ByteWriter w;
    w.put_bytes(kVectorMagic);
    w.put<std::uint32_t>(kVectorFormatVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dim));
    w.put<std::uint64_t>(vecs.size());
    for (const auto& v : vecs) {
        detail::check_same_dim(dim, v.dim());
        w.put_floats(v.values().data(), dim);
    }
    w.seal();
    return w.bytes();
}

inline std::vector<EmbeddingVector> deserialize_vectors(std::string_view file) {
    if (file.size() < kVectorMagic.size() + 4 || file.substr(0, kVectorMagic.size()) != kVectorMagic) {
        fail(Errc::VersionMismatch, "not an lmforge vector file");
    }
    ByteReader head(file.substr(kVectorMagic.size()), Errc::CorruptIndex);
    if (const auto v = head.get<std::uint32_t>("version"); v != kVectorFormatVersion) {
        fail(Errc::VersionMismatch, "vector file version " + std::to_string(v) + " is not supported");
    }
    ByteReader r(verify_crc_trailer(file, Errc::CorruptIndex), Errc::CorruptIndex);
    r.get_bytes(kVectorMagic.size() + 4, "header");
    const auto dim = r.get<std::uint32_t>("dim");
    const auto count = r.get<std::uint64_t>("count");
    if (dim == 0 ? count != 0 : count > r.remaining() / (sizeof(float) * dim)) r.corrupt("vector block size mismatch");
    std::vector<EmbeddingVector> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::vector<float> v(dim);
        r.get_floats(v.data(), dim, "vector");
        out.emplace_back(std::move(v));
    }
    if (r.remaining() != 0) r.corrupt("trailing bytes");
    return out;
}

inline void save_vectors(const std::filesystem::path& path, std::span<const EmbeddingVector> vecs) {
    write_file(path, serialize_vectors(vecs));
}

inline std::vector<EmbeddingVector> load_vectors(const std::filesystem::path& path) {
    return deserialize_vectors(read_file(path));
}

}  // namespace lmforge
