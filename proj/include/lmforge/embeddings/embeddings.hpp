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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lmforge/util/error.hpp"

namespace lmforge {

/// Dense float vector with a fixed dimensionality. Construction rejects
/// non-finite components and empty vectors.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
        if (values_.empty()) fail(Errc::Precondition, "embedding must have dim >= 1");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                fail(Errc::Precondition, "non-finite embedding component", {}, i);
            }
        }
    }

    EmbeddingVector(std::initializer_list<float> values)
        : EmbeddingVector(std::vector<float>(values)) {}

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    const float* data() const noexcept { return values_.data(); }
    float operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<float> values_;
};

namespace detail {

inline void check_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        fail(Errc::DimensionMismatch,
             "dimension " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

// Index-ascending double accumulation; dot(a, b) and dot(b, a) are bit-equal.
inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
    return s;
}

inline double squared_norm(std::span<const float> a) noexcept { return dot(a, a); }

}  // namespace detail

inline double l2_norm(const EmbeddingVector& v) noexcept {
    return std::sqrt(detail::squared_norm(v.values()));
}

/// Cosine similarity, clamped to [-1, 1].
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    detail::check_same_dim(a.dim(), b.dim());
    const double na = detail::squared_norm(a.values());
    const double nb = detail::squared_norm(b.values());
    if (na == 0.0 || nb == 0.0) fail(Errc::ZeroVector, "cosine of a zero vector");
    const double c = detail::dot(a.values(), b.values()) / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

/// Unit-length copy. Norm is computed and applied in double, then stored as f32.
inline EmbeddingVector normalize(const EmbeddingVector& v) {
    const double n = l2_norm(v);
    if (n == 0.0) fail(Errc::ZeroVector, "cannot normalize a zero vector");
    std::vector<float> out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) out[i] = static_cast<float>(double(v[i]) / n);
    return EmbeddingVector(std::move(out));
}

/// Row-major matrix of similarities.
struct SimilarityMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Pairwise cosine between every query and every corpus vector. Norms are
/// computed once per vector and the inner loop runs over blocks of the
/// corpus so each query row stays hot.
inline SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> queries,
                                          std::span<const EmbeddingVector> corpus) {
    SimilarityMatrix m{queries.size(), corpus.size(), {}};
    if (queries.empty() || corpus.empty()) return m;
    const std::size_t dim = queries.front().dim();
    auto inv_norms = [dim](std::span<const EmbeddingVector> vs) {
        std::vector<double> out(vs.size());
        for (std::size_t i = 0; i < vs.size(); ++i) {
            detail::check_same_dim(dim, vs[i].dim());
            const double n = detail::squared_norm(vs[i].values());
            if (n == 0.0) fail(Errc::ZeroVector, "zero vector in similarity matrix", {}, i);
            out[i] = 1.0 / std::sqrt(n);
        }
        return out;
    };
    const auto qn = inv_norms(queries);
    const auto cn = inv_norms(corpus);
    m.data.resize(m.rows * m.cols);

    constexpr std::size_t kBlock = 64;
    for (std::size_t j0 = 0; j0 < m.cols; j0 += kBlock) {
        const std::size_t j1 = std::min(m.cols, j0 + kBlock);
        for (std::size_t i = 0; i < m.rows; ++i) {
            for (std::size_t j = j0; j < j1; ++j) {
                // (qn * cn) first: the product commutes, so m(i,j) == m(j,i) bit-for-bit.
                const double c = detail::dot(queries[i].values(), corpus[j].values()) * (qn[i] * cn[j]);
                m.data[i * m.cols + j] = std::clamp(c, -1.0, 1.0);
            }
        }
    }
    return m;
}

}  // namespace lmforge
