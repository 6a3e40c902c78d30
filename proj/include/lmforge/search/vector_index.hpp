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
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lmforge/search/hnsw.hpp"
#include "lmforge/search/storage.hpp"
#include "lmforge/util/binary_io.hpp"

namespace lmforge {

enum class BackendKind : std::uint32_t { Flat = 0, Hnsw = 1 };

constexpr std::string_view backend_name(BackendKind k) noexcept {
    return k == BackendKind::Flat ? "flat" : "hnsw";
}

inline BackendKind parse_backend(std::string_view s) {
    if (s == "flat") return BackendKind::Flat;
    if (s == "hnsw") return BackendKind::Hnsw;
    fail(Errc::ConfigValidation, "unknown index backend '" + std::string(s) + "'", "index_type");
}

/// Search backend over the shared column store. Backends see tombstoned
/// ordinals; the index removes them together with filtered documents.
class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    virtual BackendKind kind() const = 0;
    virtual void on_add(const IndexStorage& s, std::uint32_t ordinal) = 0;
    /// Returns candidates, ranked, of which at least `k` pass `accept` when
    /// that many exist (exact backends) or as many as the beam found.
    virtual std::vector<Candidate> search(const IndexStorage& s, std::span<const float> q, std::size_t k,
                                          const std::function<bool(std::uint32_t)>& accept) const = 0;
};

/// Exact scan.
class FlatBackend final : public SearchBackend {
public:
    BackendKind kind() const override { return BackendKind::Flat; }
    void on_add(const IndexStorage&, std::uint32_t) override {}

    std::vector<Candidate> search(const IndexStorage& s, std::span<const float> q, std::size_t k,
                                  const std::function<bool(std::uint32_t)>& accept) const override {
        std::vector<Candidate> all;
        all.reserve(s.live);
        for (std::uint32_t o = 0; o < s.count(); ++o) {
            if (accept(o)) all.push_back({o, s.similarity(q, o)});
        }
        const auto order = rank_order(s);
        const std::size_t n = std::min(k, all.size());
        std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(n), all.end(), order);
        all.resize(n);
        return all;
    }
};

/// HNSW beam search with post-filtering; when fewer than k candidates
/// survive the filter the beam doubles, up to 4x the starting width.
class HnswBackend final : public SearchBackend {
public:
    explicit HnswBackend(HnswParams params) : graph_(params) {}

    BackendKind kind() const override { return BackendKind::Hnsw; }
    void on_add(const IndexStorage& s, std::uint32_t ordinal) override { graph_.insert(s, ordinal); }

    std::vector<Candidate> search(const IndexStorage& s, std::span<const float> q, std::size_t k,
                                  const std::function<bool(std::uint32_t)>& accept) const override {
        const std::size_t ef0 = std::max<std::size_t>(graph_.params().ef_search, k);
        std::vector<Candidate> kept;
        for (std::size_t ef = ef0;; ef *= 2) {
            kept.clear();
            for (const auto& c : graph_.query(s, q, ef)) {
                if (accept(c.ordinal)) kept.push_back(c);
            }
            if (kept.size() >= k || ef * 2 > 4 * ef0 || ef >= s.count()) break;
        }
        return kept;
    }

    HnswGraph& graph() noexcept { return graph_; }
    const HnswGraph& graph() const noexcept { return graph_; }

private:
    HnswGraph graph_;
};

/// In-process vector index: documents, a pluggable backend, metadata
/// filtering and persistence. Many concurrent readers or one writer.
class VectorIndex {
public:
    static constexpr std::string_view kMagic{"LMFIDX1\0", 8};
    static constexpr std::uint32_t kFormatVersion = 1;

    static VectorIndex flat(std::size_t dim) { return VectorIndex(dim, std::make_unique<FlatBackend>()); }

    static VectorIndex hnsw(std::size_t dim, HnswParams params = {}) {
        return VectorIndex(dim, std::make_unique<HnswBackend>(params));
    }

    static VectorIndex create(BackendKind kind, std::size_t dim, HnswParams params = {}) {
        return kind == BackendKind::Flat ? flat(dim) : hnsw(dim, params);
    }

    std::size_t dim() const noexcept { return state_->store.dim; }
    BackendKind kind() const noexcept { return state_->backend->kind(); }

    std::size_t size() const {
        std::shared_lock lock(state_->mu);
        return state_->store.live;
    }

    bool contains(std::uint64_t doc_id) const {
        std::shared_lock lock(state_->mu);
        const auto it = state_->store.ordinal_of.find(doc_id);
        return it != state_->store.ordinal_of.end() && !state_->store.deleted[it->second];
    }

    void add(IndexedDocument doc) {
        if (doc.metadata.is_null()) doc.metadata = Metadata::object();
        validate_metadata(doc.metadata);
        auto& st = *state_;
        if (doc.vector.dim() != st.store.dim) {
            fail(Errc::DimensionMismatch, "document dim " + std::to_string(doc.vector.dim()) + " != index dim " +
                                              std::to_string(st.store.dim));
        }
        const auto unit = normalize(doc.vector);
        std::unique_lock lock(st.mu);
        auto& s = st.store;
        if (s.ordinal_of.contains(doc.doc_id)) {
            fail(Errc::DuplicateDocId, "doc_id " + std::to_string(doc.doc_id) + " already indexed");
        }
        const auto ordinal = static_cast<std::uint32_t>(s.count());
        s.vectors.insert(s.vectors.end(), unit.values().begin(), unit.values().end());
        s.ids.push_back(doc.doc_id);
        s.texts.push_back(std::move(doc.text));
        s.metadata.push_back(std::move(doc.metadata));
        s.deleted.push_back(0);
        s.ordinal_of.emplace(doc.doc_id, ordinal);
        ++s.live;
        st.backend->on_add(s, ordinal);
    }

    /// Tombstones the document; it stays in the graph until the next save.
    void remove(std::uint64_t doc_id) {
        std::unique_lock lock(state_->mu);
        auto& s = state_->store;
        const auto it = s.ordinal_of.find(doc_id);
        if (it == s.ordinal_of.end() || s.deleted[it->second]) {
            fail(Errc::UnknownDocId, "doc_id " + std::to_string(doc_id) + " not in index");
        }
        s.deleted[it->second] = 1;
        --s.live;
    }

    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k, const Filter& filter = {}) const {
        if (k < 1) fail(Errc::Precondition, "k must be >= 1", "k");
        const auto& st = *state_;
        if (query.dim() != st.store.dim) {
            fail(Errc::DimensionMismatch, "query dim " + std::to_string(query.dim()) + " != index dim " +
                                              std::to_string(st.store.dim));
        }
        const auto unit = normalize(query);
        std::shared_lock lock(st.mu);
        const auto& s = st.store;
        if (s.live == 0) fail(Errc::EmptyIndex, "index holds no documents");
        auto accept = [&](std::uint32_t o) {
            return !s.deleted[o] && (!filter || filter(DocumentView{s.ids[o], s.texts[o], s.metadata[o]}));
        };
        auto cands = st.backend->search(s, unit.values(), k, accept);
        std::sort(cands.begin(), cands.end(), rank_order(s));
        if (cands.size() > k) cands.resize(k);
        std::vector<SearchHit> hits;
        hits.reserve(cands.size());
        for (const auto& c : cands) {
            hits.push_back({s.ids[c.ordinal], std::clamp(c.score, -1.0, 1.0), s.texts[c.ordinal],
                            s.metadata[c.ordinal]});
        }
        return hits;
    }

    /// Stored (normalized) vector of a live document.
    EmbeddingVector stored_vector(std::uint64_t doc_id) const {
        std::shared_lock lock(state_->mu);
        const auto& s = state_->store;
        const auto it = s.ordinal_of.find(doc_id);
        if (it == s.ordinal_of.end() || s.deleted[it->second]) {
            fail(Errc::UnknownDocId, "doc_id " + std::to_string(doc_id) + " not in index");
        }
        const auto v = s.vec(it->second);
        return EmbeddingVector(std::vector<float>(v.begin(), v.end()));
    }

    /// Null for the flat backend.
    const HnswGraph* graph() const noexcept {
        auto* h = dynamic_cast<const HnswBackend*>(state_->backend.get());
        return h ? &h->graph() : nullptr;
    }

    void set_ef_search(std::uint32_t ef) {
        std::unique_lock lock(state_->mu);
        if (auto* h = dynamic_cast<HnswBackend*>(state_->backend.get())) h->graph().set_ef_search(ef);
    }

    // --- persistence -----------------------------------------------------

    /// Serializes live documents only; tombstoned nodes and the edges that
    /// point at them are dropped.
    std::string serialize() const {
        std::shared_lock lock(state_->mu);
        const auto& s = state_->store;
        const auto* h = dynamic_cast<const HnswBackend*>(state_->backend.get());

        std::vector<std::uint32_t> remap(s.count(), HnswGraph::kNone);
        std::vector<std::uint32_t> live;
        for (std::uint32_t o = 0; o < s.count(); ++o) {
            if (!s.deleted[o]) {
                remap[o] = static_cast<std::uint32_t>(live.size());
                live.push_back(o);
            }
        }

        ByteWriter w;
        w.put_bytes(kMagic);
        w.put<std::uint32_t>(kFormatVersion);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(s.dim));
        w.put<std::uint64_t>(live.size());
        w.put<std::uint32_t>(static_cast<std::uint32_t>(kind()));
        if (h) {
            const auto& p = h->graph().params();
            w.put<std::uint32_t>(p.M);
            w.put<std::uint32_t>(p.ef_construction);
            w.put<double>(p.effective_level_multiplier());
            w.put<std::uint64_t>(p.rng_seed);
        }
        for (auto o : live) w.put_floats(s.vec(o).data(), s.dim);
        for (auto o : live) {
            w.put<std::uint64_t>(s.ids[o]);
            w.put<std::uint32_t>(static_cast<std::uint32_t>(s.texts[o].size()));
            w.put_bytes(s.texts[o]);
            const auto meta = s.metadata[o].dump();
            w.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
            w.put_bytes(meta);
        }
        if (h) {
            const auto& g = h->graph();
            for (auto o : live) {
                const int top = g.level_of(o);
                w.put<std::uint8_t>(static_cast<std::uint8_t>(top));
                for (int l = 0; l <= top; ++l) {
                    std::vector<std::uint32_t> kept;
                    for (auto n : g.neighbors(o, l)) {
                        if (remap[n] != HnswGraph::kNone) kept.push_back(remap[n]);
                    }
                    w.put<std::uint32_t>(static_cast<std::uint32_t>(kept.size()));
                    for (auto n : kept) w.put<std::uint32_t>(n);
                }
            }
        }
        w.seal();
        return w.bytes();
    }

    void save(const std::filesystem::path& path) const { write_file(path, serialize()); }

    /// ef_search is a query-time setting and is not persisted.
    static VectorIndex deserialize(std::string_view file, std::optional<std::uint32_t> ef_search = std::nullopt) {
        if (file.size() < kMagic.size()) fail(Errc::CorruptIndex, "file shorter than header", {}, file.size());
        if (file.substr(0, kMagic.size()) != kMagic) fail(Errc::VersionMismatch, "bad magic; not an lmforge index");
        if (file.size() >= kMagic.size() + 4) {
            std::uint32_t version;
            std::memcpy(&version, file.data() + kMagic.size(), 4);
            if (version != kFormatVersion) {
                fail(Errc::VersionMismatch, "index format version " + std::to_string(version) + " unsupported");
            }
        }
        const auto payload = verify_crc_trailer(file, Errc::CorruptIndex);
        ByteReader r(payload, Errc::CorruptIndex);
        r.get_bytes(kMagic.size(), "magic");
        r.get<std::uint32_t>("version");
        const auto dim = r.get<std::uint32_t>("dim");
        const auto count = r.get<std::uint64_t>("count");
        const auto tag = r.get<std::uint32_t>("backend tag");
        if (dim == 0) r.corrupt("zero dimension");
        if (tag > 1) r.corrupt("unknown backend tag " + std::to_string(tag));
        if (count > HnswGraph::kNone) r.corrupt("count too large");
        const auto kind = static_cast<BackendKind>(tag);

        HnswParams params;
        if (kind == BackendKind::Hnsw) {
            params.M = r.get<std::uint32_t>("M");
            params.ef_construction = r.get<std::uint32_t>("ef_construction");
            params.level_multiplier = r.get<double>("level_multiplier");
            params.rng_seed = r.get<std::uint64_t>("rng_seed");
            if (ef_search) params.ef_search = *ef_search;
            try {
                validate_hnsw_params(params);
            } catch (const Error& e) {
                r.corrupt(std::string("invalid HNSW params: ") + e.what());
            }
        }
        VectorIndex index = create(kind, dim, params);
        auto& s = index.state_->store;
        if (count > r.remaining() / (std::size_t(dim) * sizeof(float))) r.corrupt("truncated vector block");
        s.vectors.resize(count * dim);
        r.get_floats(s.vectors.data(), s.vectors.size(), "vector block");
        for (std::size_t i = 0; i < s.vectors.size(); ++i) {
            if (!std::isfinite(s.vectors[i])) r.corrupt("non-finite vector component");
        }
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto id = r.get<std::uint64_t>("doc_id");
            const auto text_len = r.get<std::uint32_t>("text length");
            std::string text(r.get_bytes(text_len, "text"));
            const auto meta_len = r.get<std::uint32_t>("metadata length");
            const auto meta_bytes = r.get_bytes(meta_len, "metadata");
            auto meta = Metadata::parse(meta_bytes, nullptr, false);
            if (meta.is_discarded() || !meta.is_object()) r.corrupt("metadata is not a JSON object");
            if (!s.ordinal_of.emplace(id, static_cast<std::uint32_t>(i)).second) r.corrupt("duplicate doc_id");
            s.ids.push_back(id);
            s.texts.push_back(std::move(text));
            s.metadata.push_back(std::move(meta));
            s.deleted.push_back(0);
        }
        s.live = count;
        if (kind == BackendKind::Hnsw) {
            std::vector<std::vector<std::vector<std::uint32_t>>> links(count);
            for (std::uint64_t i = 0; i < count; ++i) {
                const auto top = r.get<std::uint8_t>("node level");
                links[i].resize(std::size_t(top) + 1);
                for (std::size_t l = 0; l <= top; ++l) {
                    const auto degree = r.get<std::uint32_t>("degree");
                    if (degree > r.remaining() / 4) r.corrupt("truncated adjacency");
                    auto& list = links[i][l];
                    list.resize(degree);
                    for (auto& n : list) {
                        n = r.get<std::uint32_t>("neighbor");
                        if (n >= count) r.corrupt("neighbor ordinal out of range");
                    }
                }
            }
            for (std::uint64_t i = 0; i < count; ++i) {
                for (std::size_t l = 0; l < links[i].size(); ++l) {
                    for (auto n : links[i][l]) {
                        if (links[n].size() <= l) r.corrupt("edge to a node absent from its layer");
                    }
                }
            }
            auto& g = dynamic_cast<HnswBackend&>(*index.state_->backend).graph();
            g.restore(std::move(links));
            g.skip_draws(count);
        }
        if (r.remaining() != 0) r.corrupt("trailing bytes after index body");
        return index;
    }

    static VectorIndex load(const std::filesystem::path& path, std::optional<std::uint32_t> ef_search = std::nullopt) {
        return deserialize(read_file(path), ef_search);
    }

private:
    struct State {
        mutable std::shared_mutex mu;
        IndexStorage store;
        std::unique_ptr<SearchBackend> backend;
    };

    VectorIndex(std::size_t dim, std::unique_ptr<SearchBackend> backend) : state_(std::make_unique<State>()) {
        if (dim == 0) fail(Errc::ConfigValidation, "index dim must be positive", "dim");
        state_->store.dim = dim;
        state_->backend = std::move(backend);
    }

    std::unique_ptr<State> state_;
};

}  // namespace lmforge
