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

#include <gtest/gtest.h>

#include <cmath>

#include "lmforge/embeddings/batch.hpp"
#include "lmforge/embeddings/embeddings.hpp"
#include "lmforge/providers/mock_provider.hpp"
#include "test_util.hpp"

namespace lmforge {
namespace {

TEST(Cosine, IdentityIsOne) {
    for (const auto& v : testing::random_vectors(20, 7, 1)) EXPECT_NEAR(cosine(v, v), 1.0, 1e-12);
}

TEST(Cosine, OrthogonalIsZero) { EXPECT_EQ(cosine({1.f, 0.f}, {0.f, 1.f}), 0.0); }

TEST(Cosine, HandComputedValue) {
    // 8 / (sqrt(5) * sqrt(13))
    EXPECT_NEAR(cosine({1.f, 2.f}, {2.f, 3.f}), 0.9922778767136677, 1e-12);
}

TEST(Cosine, Errors) {
    try {
        cosine({1.f, 2.f}, {1.f, 2.f, 3.f});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
    try {
        cosine({0.f, 0.f}, {1.f, 2.f});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ZeroVector);
    }
}

TEST(Cosine, ScaleInvarianceAndExactSymmetry) {
    auto vs = testing::random_vectors(50, 16, 3);
    for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
        const auto& a = vs[i];
        const auto& b = vs[i + 1];
        EXPECT_EQ(cosine(a, b), cosine(b, a));
        for (float alpha : {0.25f, 3.0f, 1000.0f}) {
            std::vector<float> scaled;
            for (float x : a.values()) scaled.push_back(alpha * x);
            EXPECT_NEAR(cosine(EmbeddingVector(scaled), b), cosine(a, b), 1e-6);
        }
    }
}

TEST(Normalize, ThreeFourFive) {
    const auto n = normalize({3.f, 4.f});
    EXPECT_NEAR(n[0], 0.6, 1e-7);
    EXPECT_NEAR(n[1], 0.8, 1e-7);
}

TEST(Normalize, UnitNormDirectionAndIdempotence) {
    for (const auto& v : testing::random_vectors(30, 9, 5)) {
        const auto n = normalize(v);
        EXPECT_NEAR(l2_norm(n), 1.0, 1e-6);
        EXPECT_NEAR(cosine(v, n), 1.0, 1e-6);
        const auto nn = normalize(n);
        for (std::size_t i = 0; i < n.dim(); ++i) EXPECT_NEAR(nn[i], n[i], 1e-6);
    }
    try {
        normalize({0.f, 0.f});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ZeroVector);
    }
}

TEST(EmbeddingVector, RejectsNonFinite) {
    EXPECT_THROW(EmbeddingVector({1.f, std::nanf("")}), Error);
    EXPECT_THROW(EmbeddingVector(std::vector<float>{}), Error);
}

TEST(SimilarityMatrix, MatchesLoopOfCosine) {
    const auto q = testing::random_vectors(3, 5, 11);
    const auto c = testing::random_vectors(4, 5, 12);
    const auto m = similarity_matrix(q, c);
    ASSERT_EQ(m.rows, 3u);
    ASSERT_EQ(m.cols, 4u);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(m(i, j), cosine(q[i], c[j]), 1e-6);
}

TEST(SimilarityMatrix, BlockedPathOnLargerInputs) {
    const auto q = testing::random_vectors(20, 24, 13);
    const auto c = testing::random_vectors(150, 24, 14);
    const auto m = similarity_matrix(q, c);
    for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) EXPECT_NEAR(m(i, j), cosine(q[i], c[j]), 1e-6);
}

TEST(SimilarityMatrix, SelfSimilarityDiagonalAndSymmetry) {
    const auto v = testing::random_vectors(6, 4, 15);
    const auto m = similarity_matrix(v, v);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_NEAR(m(i, i), 1.0, 1e-12);
        for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(m(i, j), m(j, i));
    }
}

TEST(SimilarityMatrix, OrthonormalBasisGivesIdentity) {
    std::vector<EmbeddingVector> basis;
    for (int i = 0; i < 4; ++i) {
        std::vector<float> e(4, 0.f);
        e[i] = 1.f;
        basis.emplace_back(e);
    }
    const auto m = similarity_matrix(basis, basis);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(m(i, j), i == j ? 1.0 : 0.0);
}

TEST(SimilarityMatrix, DimensionMismatch) {
    const auto a = testing::random_vectors(2, 4, 1);
    const auto b = testing::random_vectors(2, 5, 1);
    EXPECT_THROW(similarity_matrix(a, b), Error);
}

TEST(EmbedBatch, ChunksInOrder) {
    MockProvider mock(7, 8);
    const std::vector<std::string> texts{"a one", "b two", "c three", "d four", "e five"};
    const auto out = embed_batch(mock, texts, 2);
    EXPECT_EQ(mock.embed_calls(), 3u);
    ASSERT_EQ(out.size(), 5u);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        EXPECT_EQ(out[i], EmbeddingVector(mock_embedding(7, 8, texts[i])));
    }
}

TEST(EmbedBatch, SingleCallWhenBatchCoversInput) {
    MockProvider mock(7, 8);
    const std::vector<std::string> texts{"x", "y", "z"};
    embed_batch(mock, texts, 3);
    EXPECT_EQ(mock.embed_calls(), 1u);
    embed_batch(mock, texts, 100);
    EXPECT_EQ(mock.embed_calls(), 2u);
}

TEST(EmbedBatch, RaggedReplyIsDimensionMismatchWithChunkIndex) {
    MockProvider mock(7, 8);
    const std::vector<std::string> texts{"a", "b", "c", "d"};
    mock.set_ragged_embeddings(true);
    try {
        embed_batch(mock, texts, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
        EXPECT_EQ(e.position(), 0u);
    }
}

TEST(EmbedBatch, EmptyInputIsPrecondition) {
    MockProvider mock;
    std::vector<std::string> none;
    EXPECT_THROW(embed_batch(mock, none, 2), Error);
}

}  // namespace
}  // namespace lmforge
