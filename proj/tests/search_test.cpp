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

#include <cstring>
#include <set>
#include <thread>

#include "lmforge/search/vector_index.hpp"
#include "test_util.hpp"

namespace lmforge {
namespace {

using testing::brute_force_top_k;
using testing::random_vectors;

std::vector<std::uint64_t> iota_ids(std::size_t n, std::uint64_t start = 0) {
    std::vector<std::uint64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = start + i;
    return ids;
}

void fill(VectorIndex& index, const std::vector<EmbeddingVector>& vs, const std::vector<std::uint64_t>& ids) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
        index.add({ids[i], "doc " + std::to_string(ids[i]), Metadata::object(), vs[i]});
    }
}

void expect_matches_oracle(const std::vector<SearchHit>& hits, const std::vector<testing::OracleHit>& oracle) {
    ASSERT_EQ(hits.size(), oracle.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(hits[i].doc_id, oracle[i].id) << "rank " << i;
        EXPECT_NEAR(hits[i].score, oracle[i].score, 1e-6);
    }
}

EmbeddingVector basis(std::size_t dim, std::size_t axis) {
    std::vector<float> v(dim, 0.f);
    v[axis] = 1.f;
    return EmbeddingVector(v);
}

class BothBackends : public ::testing::TestWithParam<BackendKind> {
protected:
    VectorIndex make(std::size_t dim) { return VectorIndex::create(GetParam(), dim, HnswParams{4, 16, 16, {}, 9}); }
};

TEST_P(BothBackends, OrthogonalBasisQuery) {
    auto index = make(4);
    for (std::size_t i = 0; i < 4; ++i) index.add({i + 1, "e" + std::to_string(i + 1), {}, basis(4, i)});
    const auto hits = index.search(basis(4, 0), 2);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].doc_id, 1u);
    EXPECT_EQ(hits[0].score, 1.0);
    EXPECT_EQ(hits[1].doc_id, 2u);  // tie at 0.0 broken by ascending id
    EXPECT_EQ(hits[1].score, 0.0);
}

TEST_P(BothBackends, DuplicateIdAndDimensionErrors) {
    auto index = make(3);
    index.add({5, "a", {}, {1.f, 0.f, 0.f}});
    try {
        index.add({5, "b", {}, {0.f, 1.f, 0.f}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateDocId);
    }
    try {
        index.add({6, "b", {}, {0.f, 1.f}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
    try {
        index.search({1.f, 0.f}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
}

TEST_P(BothBackends, EmptyIndex) {
    auto index = make(3);
    try {
        index.search({1.f, 0.f, 0.f}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyIndex);
    }
}

TEST_P(BothBackends, MetadataFilterContract) {
    auto index = make(8);
    const auto vs = random_vectors(60, 8, 21);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        index.add({i, "t", {{"lang", i % 3 == 0 ? "en" : "de"}, {"n", int(i)}}, vs[i]});
    }
    const auto filter = metadata_equals("lang", "en");
    const auto hits = index.search(vs[1], 10, filter);
    EXPECT_EQ(hits.size(), 10u);
    for (const auto& h : hits) EXPECT_EQ(h.metadata.at("lang"), "en");
}

TEST_P(BothBackends, DeleteExcludesAndDoubleDeleteFails) {
    auto index = make(4);
    const auto vs = random_vectors(10, 4, 2);
    fill(index, vs, iota_ids(10));
    index.remove(3);
    EXPECT_FALSE(index.contains(3));
    EXPECT_EQ(index.size(), 9u);
    for (const auto& h : index.search(vs[3], 10)) EXPECT_NE(h.doc_id, 3u);
    try {
        index.remove(3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownDocId);
    }
}

TEST_P(BothBackends, RejectsNonScalarMetadata) {
    auto index = make(2);
    EXPECT_THROW(index.add({1, "x", {{"nested", {{"a", 1}}}}, {1.f, 0.f}}), Error);
}

INSTANTIATE_TEST_SUITE_P(Backends, BothBackends, ::testing::Values(BackendKind::Flat, BackendKind::Hnsw),
                         [](const auto& info) { return std::string(backend_name(info.param)); });

TEST(FlatIndex, ExactAgainstBruteForceOnSeededInstances) {
    std::mt19937_64 rng(99);
    for (int instance = 0; instance < 25; ++instance) {
        const std::size_t n = 1 + rng() % 300;
        const std::size_t dim = 1 + rng() % 48;
        const std::size_t k = 1 + rng() % 20;
        const auto vs = random_vectors(n, dim, rng());
        auto ids = iota_ids(n, 1000);
        std::shuffle(ids.begin(), ids.end(), rng);
        auto index = VectorIndex::flat(dim);
        fill(index, vs, ids);
        const auto q = random_vectors(1, dim, rng()).front();
        expect_matches_oracle(index.search(q, k), brute_force_top_k(vs, ids, q, k));
    }
}

TEST(FlatIndex, FilteredExactness) {
    const auto vs = random_vectors(120, 6, 5);
    auto index = VectorIndex::flat(6);
    std::vector<bool> keep(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
        keep[i] = (i % 4 == 1);
        index.add({i, "", {{"bucket", int(i % 4)}}, vs[i]});
    }
    const auto q = random_vectors(1, 6, 77).front();
    expect_matches_oracle(index.search(q, 7, metadata_equals("bucket", 1)),
                          brute_force_top_k(vs, iota_ids(vs.size()), q, 7, keep));
}

TEST(HnswIndex, FirstInsertBecomesEntryPoint) {
    auto index = VectorIndex::hnsw(3);
    index.add({42, "", {}, {1.f, 2.f, 3.f}});
    ASSERT_NE(index.graph(), nullptr);
    EXPECT_EQ(index.graph()->entry_point(), 0u);
    EXPECT_EQ(index.graph()->max_level(), index.graph()->level_of(0));
}

TEST(HnswIndex, DegreeBoundsAfterSeededBuild) {
    HnswParams p{8, 32, 32, {}, 7};
    auto index = VectorIndex::hnsw(16, p);
    fill(index, random_vectors(100, 16, 8), iota_ids(100));
    const auto* g = index.graph();
    for (std::uint32_t node = 0; node < g->size(); ++node) {
        EXPECT_LE(g->neighbors(node, 0).size(), 2u * p.M);
        for (int l = 1; l <= g->level_of(node); ++l) EXPECT_LE(g->neighbors(node, l).size(), p.M);
        for (int l = 0; l <= g->level_of(node); ++l) {
            for (auto n : g->neighbors(node, l)) {
                EXPECT_NE(n, node);
                EXPECT_GE(g->level_of(n), l);
            }
        }
    }
}

TEST(HnswIndex, DeterministicForSeedAndInsertOrder) {
    const auto vs = random_vectors(300, 12, 4);
    auto a = VectorIndex::hnsw(12, HnswParams{6, 40, 20, {}, 123});
    auto b = VectorIndex::hnsw(12, HnswParams{6, 40, 20, {}, 123});
    fill(a, vs, iota_ids(300));
    fill(b, vs, iota_ids(300));
    EXPECT_EQ(a.graph()->links(), b.graph()->links());
    EXPECT_EQ(a.graph()->entry_point(), b.graph()->entry_point());
    for (const auto& q : random_vectors(10, 12, 5)) EXPECT_EQ(a.search(q, 5), b.search(q, 5));
}

TEST(HnswIndex, DeletedEntryPointStillAnswersCorrectly) {
    const auto vs = random_vectors(60, 8, 31);
    auto index = VectorIndex::hnsw(8, HnswParams{8, 64, 64, {}, 3});
    const auto ids = iota_ids(60);
    fill(index, vs, ids);
    const auto entry_id = ids[index.graph()->entry_point()];
    index.remove(entry_id);
    std::vector<bool> keep(60, true);
    keep[entry_id] = false;
    for (const auto& q : random_vectors(10, 8, 32)) {
        expect_matches_oracle(index.search(q, 5), brute_force_top_k(vs, ids, q, 5, keep));
    }
}

TEST(HnswIndex, RecallOnModerateInstance) {
    const auto vs = random_vectors(1500, 16, 41);
    const auto ids = iota_ids(vs.size());
    auto index = VectorIndex::hnsw(16, HnswParams{12, 100, 64, {}, 5});
    fill(index, vs, ids);
    double recall = 0;
    const auto queries = random_vectors(30, 16, 42);
    for (const auto& q : queries) {
        const auto truth = brute_force_top_k(vs, ids, q, 10);
        std::set<std::uint64_t> want;
        for (const auto& t : truth) want.insert(t.id);
        std::size_t got = 0;
        for (const auto& h : index.search(q, 10)) got += want.count(h.doc_id);
        recall += double(got) / 10.0;
    }
    EXPECT_GE(recall / double(queries.size()), 0.95);
}

TEST(HnswIndex, FilterWidensBeam) {
    // Only 1 in 25 documents passes; ef_search=10 alone cannot find k=5.
    const auto vs = random_vectors(500, 8, 51);
    auto index = VectorIndex::hnsw(8, HnswParams{8, 50, 10, {}, 1});
    for (std::size_t i = 0; i < vs.size(); ++i) index.add({i, "", {{"rare", i % 25 == 0}}, vs[i]});
    const auto hits = index.search(vs[0], 5, metadata_equals("rare", true));
    EXPECT_GE(hits.size(), 1u);
    EXPECT_LE(hits.size(), 5u);
    for (const auto& h : hits) EXPECT_EQ(h.doc_id % 25, 0u);
}

// --- persistence --------------------------------------------------------

class Persistence : public ::testing::TestWithParam<BackendKind> {};

TEST_P(Persistence, RoundTripAnswersIdentically) {
    const auto vs = random_vectors(100, 10, 61);
    auto index = VectorIndex::create(GetParam(), 10, HnswParams{8, 40, 30, {}, 17});
    for (std::size_t i = 0; i < vs.size(); ++i) {
        index.add({i * 3 + 1, "text " + std::to_string(i), {{"lang", i % 2 ? "en" : "fr"}, {"score", i * 0.5}},
                   vs[i]});
    }
    testing::TempDir dir;
    index.save(dir / "idx.bin");
    const auto loaded = VectorIndex::load(dir / "idx.bin", 30);
    EXPECT_EQ(loaded.kind(), GetParam());
    EXPECT_EQ(loaded.size(), 100u);
    for (const auto& q : random_vectors(20, 10, 62)) {
        const auto a = index.search(q, 10);
        const auto b = loaded.search(q, 10);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].doc_id, b[i].doc_id);
            EXPECT_EQ(std::memcmp(&a[i].score, &b[i].score, sizeof(double)), 0);
            EXPECT_EQ(a[i].text, b[i].text);
            EXPECT_EQ(a[i].metadata, b[i].metadata);
        }
    }
    EXPECT_EQ(loaded.serialize(), index.serialize());
}

TEST_P(Persistence, TruncatedFileIsCorrupt) {
    auto index = VectorIndex::create(GetParam(), 4);
    fill(index, random_vectors(10, 4, 1), iota_ids(10));
    const auto bytes = index.serialize();
    for (std::size_t cut : {std::size_t{9}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        try {
            VectorIndex::deserialize(std::string_view(bytes).substr(0, cut));
            FAIL() << "cut " << cut;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::CorruptIndex) << "cut " << cut;
        }
    }
}

TEST_P(Persistence, FlippedByteIsCorrupt) {
    auto index = VectorIndex::create(GetParam(), 4);
    fill(index, random_vectors(10, 4, 1), iota_ids(10));
    auto bytes = index.serialize();
    bytes[bytes.size() / 2] ^= 0x5a;
    try {
        VectorIndex::deserialize(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::CorruptIndex);
        ASSERT_TRUE(e.position().has_value());
    }
}

TEST_P(Persistence, WrongMagicIsVersionMismatch) {
    auto index = VectorIndex::create(GetParam(), 4);
    fill(index, random_vectors(3, 4, 1), iota_ids(3));
    auto bytes = index.serialize();
    bytes[0] = 'X';
    try {
        VectorIndex::deserialize(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::VersionMismatch);
    }
    bytes = index.serialize();
    bytes[8] = 9;  // format version
    try {
        VectorIndex::deserialize(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::VersionMismatch);
    }
}

TEST_P(Persistence, SaveCompactsTombstones) {
    const auto vs = random_vectors(40, 6, 71);
    auto index = VectorIndex::create(GetParam(), 6, HnswParams{6, 30, 40, {}, 2});
    const auto ids = iota_ids(40);
    fill(index, vs, ids);
    std::vector<bool> keep(40, true);
    for (std::uint64_t id : {0u, 7u, 8u, 20u}) {
        index.remove(id);
        keep[id] = false;
    }
    const auto loaded = VectorIndex::deserialize(index.serialize(), 40);
    EXPECT_EQ(loaded.size(), 36u);
    EXPECT_FALSE(loaded.contains(7));
    for (const auto& q : random_vectors(5, 6, 72)) {
        expect_matches_oracle(loaded.search(q, 5), brute_force_top_k(vs, ids, q, 5, keep));
    }
}

INSTANTIATE_TEST_SUITE_P(Backends, Persistence, ::testing::Values(BackendKind::Flat, BackendKind::Hnsw),
                         [](const auto& info) { return std::string(backend_name(info.param)); });

TEST(Persistence, HeaderLayoutIsLittleEndianPerFormat) {
    auto index = VectorIndex::hnsw(3, HnswParams{4, 8, 8, 0.5, 77});
    index.add({0x0102030405060708ULL, "hi", {{"k", "v"}}, {1.f, 0.f, 0.f}});
    const auto b = index.serialize();
    auto u32 = [&](std::size_t off) {
        std::uint32_t v;
        std::memcpy(&v, b.data() + off, 4);
        return v;
    };
    auto u64 = [&](std::size_t off) {
        std::uint64_t v;
        std::memcpy(&v, b.data() + off, 8);
        return v;
    };
    EXPECT_EQ(std::string_view(b.data(), 8), std::string_view("LMFIDX1\0", 8));
    EXPECT_EQ(u32(8), 1u);
    EXPECT_EQ(u32(12), 3u);
    EXPECT_EQ(u64(16), 1u);
    EXPECT_EQ(u32(24), 1u);  // hnsw
    EXPECT_EQ(u32(28), 4u);  // M
    EXPECT_EQ(u32(32), 8u);  // ef_construction
    double ml;
    std::memcpy(&ml, b.data() + 36, 8);
    EXPECT_EQ(ml, 0.5);
    EXPECT_EQ(u64(44), 77u);
    float first;
    std::memcpy(&first, b.data() + 52, 4);
    EXPECT_EQ(first, 1.f);
    const std::size_t doc = 52 + 12;
    EXPECT_EQ(u64(doc), 0x0102030405060708ULL);
    EXPECT_EQ(u32(doc + 8), 2u);
    EXPECT_EQ(std::string_view(b.data() + doc + 12, 2), "hi");
    EXPECT_EQ(u32(doc + 14), 9u);
    EXPECT_EQ(std::string_view(b.data() + doc + 18, 9), R"({"k":"v"})");
    const std::size_t adj = doc + 27;
    EXPECT_EQ(static_cast<std::uint8_t>(b[adj]), index.graph()->level_of(0));
    EXPECT_EQ(b.size(), adj + 1 + 4 * std::size_t(index.graph()->level_of(0) + 1) + 4);
    EXPECT_EQ(u32(b.size() - 4), crc32_of(std::string_view(b).substr(0, b.size() - 4)));
}

TEST(Concurrency, ReadersRunAlongsideAWriter) {
    auto index = VectorIndex::hnsw(8, HnswParams{6, 30, 20, {}, 1});
    const auto vs = random_vectors(400, 8, 81);
    fill(index, std::vector<EmbeddingVector>(vs.begin(), vs.begin() + 50), iota_ids(50));
    std::atomic<bool> done{false};
    std::atomic<std::size_t> searches{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
        readers.emplace_back([&, t] {
            std::size_t i = t;
            while (!done) {
                const auto hits = index.search(vs[i++ % vs.size()], 5);
                EXPECT_EQ(hits.size(), 5u);
                ++searches;
            }
        });
    }
    for (std::size_t i = 50; i < vs.size(); ++i) index.add({i, "", {}, vs[i]});
    done = true;
    for (auto& r : readers) r.join();
    EXPECT_EQ(index.size(), 400u);
    EXPECT_GT(searches.load(), 0u);
}

}  // namespace
}  // namespace lmforge
