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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmforge/embeddings/embeddings.hpp"

namespace lmforge {

/// Flat map string -> (string | number | boolean), kept as a JSON object.
using Metadata = nlohmann::json;

inline void validate_metadata(const Metadata& m) {
    if (!m.is_object()) fail(Errc::Precondition, "metadata must be a JSON object", "metadata");
    for (const auto& [key, value] : m.items()) {
        if (!(value.is_string() || value.is_number() || value.is_boolean())) {
            fail(Errc::Precondition, "metadata value for '" + key + "' must be string, number or boolean",
                 key);
        }
    }
}

struct IndexedDocument {
    std::uint64_t doc_id = 0;
    std::string text;
    Metadata metadata = Metadata::object();
    EmbeddingVector vector;
};

/// What a filter predicate sees of a stored document.
struct DocumentView {
    std::uint64_t doc_id;
    const std::string& text;
    const Metadata& metadata;
};

using Filter = std::function<bool(const DocumentView&)>;

/// metadata[key] == value (JSON equality; 1 and 1.0 compare equal).
inline Filter metadata_equals(std::string key, Metadata value) {
    return [key = std::move(key), value = std::move(value)](const DocumentView& d) {
        const auto it = d.metadata.find(key);
        return it != d.metadata.end() && *it == value;
    };
}

struct SearchHit {
    std::uint64_t doc_id = 0;
    double score = 0.0;
    std::string text;
    Metadata metadata;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Column store shared by the backends: ordinal -> (id, text, metadata,
/// normalized f32 vector, tombstone).
struct IndexStorage {
    std::size_t dim = 0;
    std::vector<float> vectors;
    std::vector<std::uint64_t> ids;
    std::vector<std::string> texts;
    std::vector<Metadata> metadata;
    std::vector<std::uint8_t> deleted;
    std::unordered_map<std::uint64_t, std::uint32_t> ordinal_of;
    std::size_t live = 0;

    std::size_t count() const noexcept { return ids.size(); }

    std::span<const float> vec(std::uint32_t ordinal) const noexcept {
        return {vectors.data() + std::size_t(ordinal) * dim, dim};
    }

    double similarity(std::span<const float> q, std::uint32_t ordinal) const noexcept {
        return detail::dot(q, vec(ordinal));
    }

    double similarity(std::uint32_t a, std::uint32_t b) const noexcept { return detail::dot(vec(a), vec(b)); }
};

/// Scored ordinal. Ranking is score descending, then doc id ascending.
struct Candidate {
    std::uint32_t ordinal;
    double score;
};

inline auto rank_order(const IndexStorage& s) {
    return [&s](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return s.ids[a.ordinal] < s.ids[b.ordinal];
    };
}

}  // namespace lmforge
