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

#include <span>
#include <string>
#include <vector>

#include "lmforge/embeddings/embeddings.hpp"
#include "lmforge/providers/provider.hpp"

namespace lmforge {

/// Embeds `texts` in chunks of at most `batch_size`, one provider call per
/// chunk, in order. Provider errors are re-thrown with the chunk index.
inline std::vector<EmbeddingVector> embed_batch(Provider& provider, std::span<const std::string> texts,
                                                std::size_t batch_size) {
    if (texts.empty()) fail(Errc::Precondition, "texts must be non-empty");
    if (batch_size == 0) fail(Errc::Precondition, "batch_size must be positive", "batch_size");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::size_t chunk = 0;
    for (std::size_t start = 0; start < texts.size(); start += batch_size, ++chunk) {
        const auto part = texts.subspan(start, std::min(batch_size, texts.size() - start));
        std::vector<std::vector<float>> vectors;
        try {
            vectors = embed(provider, part);
        } catch (const Error& e) {
            throw Error(e.code(), "chunk " + std::to_string(chunk) + ": " + e.what(), e.field(), chunk);
        }
        for (auto& v : vectors) {
            if (!out.empty() && v.size() != out.front().dim()) {
                fail(Errc::DimensionMismatch, "chunk " + std::to_string(chunk) + " changed dimensionality",
                     {}, chunk);
            }
            out.emplace_back(std::move(v));
        }
    }
    return out;
}

}  // namespace lmforge
