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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <zlib.h>

#include "lmforge/util/error.hpp"

namespace lmforge {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian and written with memcpy");

inline std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in bounded pieces.
    while (!bytes.empty()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size(), 1u << 30));
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), n);
        bytes.remove_prefix(n);
    }
    return static_cast<std::uint32_t>(crc);
}

/// Append-only little-endian byte buffer.
class ByteWriter {
public:
    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        buf_.append(raw, sizeof(T));
    }

    void put_bytes(std::string_view bytes) { buf_.append(bytes); }

    void put_floats(const float* data, std::size_t n) {
        buf_.append(reinterpret_cast<const char*>(data), n * sizeof(float));
    }

    /// Appends the CRC32 of everything written so far.
    void seal() { put<std::uint32_t>(crc32_of(buf_)); }

    const std::string& bytes() const noexcept { return buf_; }

private:
    std::string buf_;
};

/// Bounds-checked reader; every failure reports the byte offset where it
/// happened through `on_error`'s error code.
class ByteReader {
public:
    ByteReader(std::string_view bytes, Errc corrupt_code) : bytes_(bytes), code_(corrupt_code) {}

    template <class T>
        requires std::is_arithmetic_v<T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string_view get_bytes(std::size_t n, const char* what) {
        need(n, what);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    void get_floats(float* out, std::size_t n, const char* what) {
        if (n > remaining() / sizeof(float)) corrupt(std::string("truncated ") + what);
        std::memcpy(out, bytes_.data() + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    [[noreturn]] void corrupt(const std::string& reason) const {
        fail(code_, reason + " at offset " + std::to_string(pos_), {}, pos_);
    }

private:
    void need(std::size_t n, const char* what) const {
        if (n > remaining()) corrupt(std::string("truncated ") + what);
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
    Errc code_;
};

/// Validates and strips the trailing CRC32; returns the payload.
inline std::string_view verify_crc_trailer(std::string_view file, Errc corrupt_code) {
    if (file.size() < sizeof(std::uint32_t)) {
        fail(corrupt_code, "file too short for checksum", {}, file.size());
    }
    const auto payload = file.substr(0, file.size() - sizeof(std::uint32_t));
    std::uint32_t stored;
    std::memcpy(&stored, file.data() + payload.size(), sizeof(stored));
    if (stored != crc32_of(payload)) {
        fail(corrupt_code, "checksum mismatch", {}, payload.size());
    }
    return payload;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::Io, "cannot open " + path.string() + " for reading", path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::Io, "cannot open " + path.string() + " for writing", path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::Io, "write failed for " + path.string(), path.string());
}

}  // namespace lmforge
