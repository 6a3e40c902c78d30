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

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lmforge/embeddings/embeddings.hpp"

namespace lmforge::testing {

inline std::vector<float> random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(n(rng));
    return v;
}

inline std::vector<EmbeddingVector> random_vectors(std::size_t count, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<EmbeddingVector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.emplace_back(random_vector(rng, dim));
    return out;
}

/// Brute-force oracle: normalizes every vector in double, stores it as
/// f32 (the index storage contract), scores by a double dot product, then
/// fully sorts by (score desc, id asc).
struct OracleHit {
    std::uint64_t id;
    double score;
};

inline std::vector<float> oracle_unit(const EmbeddingVector& v) {
    double n = 0.0;
    for (float x : v.values()) n += double(x) * double(x);
    n = std::sqrt(n);
    std::vector<float> out;
    for (float x : v.values()) out.push_back(static_cast<float>(double(x) / n));
    return out;
}

inline std::vector<OracleHit> brute_force_top_k(const std::vector<EmbeddingVector>& corpus,
                                                const std::vector<std::uint64_t>& ids,
                                                const EmbeddingVector& query, std::size_t k,
                                                const std::vector<bool>& keep = {}) {
    const auto q = oracle_unit(query);
    std::vector<OracleHit> all;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!keep.empty() && !keep[i]) continue;
        const auto v = oracle_unit(corpus[i]);
        double s = 0.0;
        for (std::size_t d = 0; d < v.size(); ++d) s += double(q[d]) * double(v[d]);
        all.push_back({ids[i], s});
    }
    std::sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("lmforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace lmforge::testing
