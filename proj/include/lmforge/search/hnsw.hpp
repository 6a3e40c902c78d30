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
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "lmforge/search/storage.hpp"
#include "lmforge/util/rng.hpp"

namespace lmforge {

struct HnswParams {
    std::uint32_t M = 16;
    std::uint32_t ef_construction = 200;
    std::uint32_t ef_search = 100;
    std::optional<double> level_multiplier;  // defaults to 1 / ln(M)
    std::uint64_t rng_seed = 42;

    double effective_level_multiplier() const { return level_multiplier.value_or(1.0 / std::log(double(M))); }
};

inline void validate_hnsw_params(const HnswParams& p) {
    if (p.M < 2) fail(Errc::ConfigValidation, "M must be >= 2", "M");
    if (p.ef_construction < p.M) fail(Errc::ConfigValidation, "ef_construction must be >= M", "ef_construction");
    if (p.ef_search < 1) fail(Errc::ConfigValidation, "ef_search must be >= 1", "ef_search");
    const double ml = p.effective_level_multiplier();
    if (!(ml > 0.0) || !std::isfinite(ml)) {
        fail(Errc::ConfigValidation, "level_multiplier must be positive and finite", "level_multiplier");
    }
}

/// Hierarchical navigable small-world graph over the ordinals of an
/// IndexStorage. Similarity is the dot product of normalized vectors.
class HnswGraph {
public:
    static constexpr std::uint32_t kNone = ~std::uint32_t{0};
    static constexpr int kMaxLevel = 255;  // persisted as u8

    explicit HnswGraph(HnswParams params) : params_(params), rng_(params.rng_seed) {
        validate_hnsw_params(params_);
    }

    const HnswParams& params() const noexcept { return params_; }
    void set_ef_search(std::uint32_t ef) { params_.ef_search = std::max<std::uint32_t>(ef, 1); }

    std::uint32_t entry_point() const noexcept { return entry_; }
    int max_level() const noexcept { return max_level_; }
    std::size_t size() const noexcept { return links_.size(); }
    int level_of(std::uint32_t node) const { return int(links_[node].size()) - 1; }
    const std::vector<std::uint32_t>& neighbors(std::uint32_t node, int level) const {
        return links_[node][std::size_t(level)];
    }

    std::size_t max_degree(int level) const noexcept { return level == 0 ? 2 * params_.M : params_.M; }

    /// Draws floor(-ln(U) * mL), U uniform in (0, 1].
    int draw_level() {
        const double u = rng_.uniform_open_low();
        const double l = std::floor(-std::log(u) * params_.effective_level_multiplier());
        return int(std::min<double>(l, kMaxLevel));
    }

    /// Discards `n` level draws, so a reloaded graph continues the sequence
    /// of a freshly built one with the same insert count.
    void skip_draws(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) rng_.uniform();
    }

    /// Inserts `node` (== current size) whose vector is already in storage.
    void insert(const IndexStorage& s, std::uint32_t node) {
        const int level = draw_level();
        links_.emplace_back(std::size_t(level) + 1);
        if (entry_ == kNone) {
            entry_ = node;
            max_level_ = level;
            return;
        }
        const auto q = s.vec(node);
        std::uint32_t cur = entry_;
        double cur_sim = s.similarity(q, cur);
        for (int l = max_level_; l > level; --l) greedy_step(s, q, l, cur, cur_sim);

        for (int l = std::min(level, max_level_); l >= 0; --l) {
            auto found = search_layer(s, q, {Candidate{cur, cur_sim}}, params_.ef_construction, l);
            auto selected = select_neighbors(s, found, params_.M);
            auto& mine = links_[node][std::size_t(l)];
            mine.clear();
            for (const auto& c : selected) mine.push_back(c.ordinal);
            for (const auto& c : selected) connect(s, c.ordinal, node, l);
            cur = found.front().ordinal;
            cur_sim = found.front().score;
        }
        if (level > max_level_) {
            entry_ = node;
            max_level_ = level;
        }
    }

    /// Top-`ef` nodes nearest to q at layer 0 (tombstones included), best first.
    std::vector<Candidate> query(const IndexStorage& s, std::span<const float> q, std::size_t ef) const {
        if (entry_ == kNone) return {};
        std::uint32_t cur = entry_;
        double cur_sim = s.similarity(q, cur);
        for (int l = max_level_; l > 0; --l) greedy_step(s, q, l, cur, cur_sim);
        return search_layer(s, q, {Candidate{cur, cur_sim}}, ef, 0);
    }

    /// Rebuilds from persisted adjacency. The entry point is the lowest
    /// ordinal among nodes of maximal level, which is the node insertion
    /// would have chosen.
    void restore(std::vector<std::vector<std::vector<std::uint32_t>>> links) {
        links_ = std::move(links);
        entry_ = kNone;
        max_level_ = -1;
        for (std::uint32_t i = 0; i < links_.size(); ++i) {
            if (level_of(i) > max_level_) {
                max_level_ = level_of(i);
                entry_ = i;
            }
        }
    }

    const std::vector<std::vector<std::vector<std::uint32_t>>>& links() const noexcept { return links_; }

private:
    struct Closer {  // max-heap top = most similar
        bool operator()(const Candidate& a, const Candidate& b) const {
            if (a.score != b.score) return a.score < b.score;
            return a.ordinal > b.ordinal;
        }
    };
    struct Farther {  // max-heap top = least similar
        bool operator()(const Candidate& a, const Candidate& b) const {
            if (a.score != b.score) return a.score > b.score;
            return a.ordinal < b.ordinal;
        }
    };

    void greedy_step(const IndexStorage& s, std::span<const float> q, int level, std::uint32_t& cur,
                     double& cur_sim) const {
        for (bool changed = true; changed;) {
            changed = false;
            for (std::uint32_t n : links_[cur][std::size_t(level)]) {
                const double sim = s.similarity(q, n);
                if (sim > cur_sim || (sim == cur_sim && n < cur)) {
                    cur = n;
                    cur_sim = sim;
                    changed = true;
                }
            }
        }
    }

    std::vector<Candidate> search_layer(const IndexStorage& s, std::span<const float> q,
                                        std::vector<Candidate> entry, std::size_t ef, int level) const {
        std::vector<std::uint8_t> visited(links_.size(), 0);
        std::priority_queue<Candidate, std::vector<Candidate>, Closer> frontier;
        std::priority_queue<Candidate, std::vector<Candidate>, Farther> best;
        for (const auto& e : entry) {
            visited[e.ordinal] = 1;
            frontier.push(e);
            best.push(e);
        }
        while (!frontier.empty()) {
            const Candidate c = frontier.top();
            if (best.size() >= ef && c.score < best.top().score) break;
            frontier.pop();
            for (std::uint32_t n : links_[c.ordinal][std::size_t(level)]) {
                if (visited[n]) continue;
                visited[n] = 1;
                const double sim = s.similarity(q, n);
                if (best.size() < ef || sim > best.top().score) {
                    frontier.push({n, sim});
                    best.push({n, sim});
                    if (best.size() > ef) best.pop();
                }
            }
        }
        std::vector<Candidate> out;
        out.reserve(best.size());
        while (!best.empty()) {
            out.push_back(best.top());
            best.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    /// Keeps a candidate only if it is closer to the base node than to every
    /// neighbor already kept. `candidates` must be sorted best first.
    std::vector<Candidate> select_neighbors(const IndexStorage& s, const std::vector<Candidate>& candidates,
                                            std::size_t m) const {
        std::vector<Candidate> kept;
        for (const auto& c : candidates) {
            if (kept.size() >= m) break;
            bool good = true;
            for (const auto& r : kept) {
                if (s.similarity(c.ordinal, r.ordinal) > c.score) {
                    good = false;
                    break;
                }
            }
            if (good) kept.push_back(c);
        }
        return kept;
    }

    void connect(const IndexStorage& s, std::uint32_t from, std::uint32_t to, int level) {
        auto& list = links_[from][std::size_t(level)];
        list.push_back(to);
        const std::size_t cap = max_degree(level);
        if (list.size() <= cap) return;
        std::vector<Candidate> cands;
        cands.reserve(list.size());
        for (std::uint32_t n : list) cands.push_back({n, s.similarity(from, n)});
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.ordinal < b.ordinal;
        });
        const auto kept = select_neighbors(s, cands, cap);
        list.clear();
        for (const auto& c : kept) list.push_back(c.ordinal);
    }

    HnswParams params_;
    Rng rng_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // node -> level -> neighbors
    std::uint32_t entry_ = kNone;
    int max_level_ = -1;
};

}  // namespace lmforge
