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

#include <memory>
#include <set>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "lmforge/core/config.hpp"
#include "lmforge/labeller/labeller.hpp"
#include "lmforge/memory/store.hpp"
#include "lmforge/providers/registry.hpp"
#include "lmforge/reranker/reranker.hpp"
#include "lmforge/search/vector_index.hpp"
#include "lmforge/service/chat_service.hpp"
#include "lmforge/trainers/mimicker.hpp"

namespace lmforge {

enum class TaskKind { Generator, Labeller, Embedder, Searcher, Reranker, Mimicker, Classifier, TokenizerTrainer };

inline constexpr std::pair<std::string_view, TaskKind> kTaskKinds[] = {
    {"generator", TaskKind::Generator}, {"labeller", TaskKind::Labeller},     {"embedder", TaskKind::Embedder},
    {"searcher", TaskKind::Searcher},   {"reranker", TaskKind::Reranker},     {"mimicker", TaskKind::Mimicker},
    {"classifier", TaskKind::Classifier}, {"tokenizer-trainer", TaskKind::TokenizerTrainer},
};

inline TaskKind parse_task_kind(std::string_view s) {
    for (const auto& [name, kind] : kTaskKinds) {
        if (name == s) return kind;
    }
    fail(Errc::UnknownTaskKind, "unknown task kind '" + std::string(s) + "'");
}

inline std::string_view task_kind_name(TaskKind k) {
    for (const auto& [name, kind] : kTaskKinds) {
        if (kind == k) return name;
    }
    return "?";
}

struct GeneratorTask {
    std::shared_ptr<Provider> provider;
    std::shared_ptr<ConversationStore> store;
    std::shared_ptr<ChatService> service;
};

struct LabellerTask {
    std::shared_ptr<Labeller> labeller;
    std::size_t concurrency = 4;
};

struct EmbedderTask {
    std::shared_ptr<Provider> provider;
    std::size_t batch_size = 64;
};

struct SearcherTask {
    std::shared_ptr<VectorIndex> index;
};

struct RerankerTask {
    std::shared_ptr<Reranker> reranker;
    std::string backend;
};

struct MimickerTask {
    std::shared_ptr<Provider> teacher;
    StudentKind student = StudentKind::Linear;
    std::size_t in_dim = 64;
    std::size_t hidden = 64;
    TrainingConfig training;
};

struct ClassifierTask {
    std::shared_ptr<Provider> provider;
    TrainingConfig training;
};

struct TokenizerTrainerTask {
    TokenizerConfig config;
};

using TaskHandle = std::variant<GeneratorTask, LabellerTask, EmbedderTask, SearcherTask, RerankerTask, MimickerTask,
                                ClassifierTask, TokenizerTrainerTask>;

namespace factory_detail {

/// Typed access to a flat config record; remembers which keys were read so
/// leftovers can be rejected.
class FlatConfig {
public:
    explicit FlatConfig(const nlohmann::json& j) : j_(j) {
        if (!j.is_object()) fail(Errc::ConfigValidation, "task config must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::optional<std::string> string(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        if (!j_[key].is_string()) bad(key, "expected a string");
        return j_[key].get<std::string>();
    }

    std::string required_string(const std::string& key) {
        auto v = string(key);
        if (!v || v->empty()) bad(key, "is required");
        return *v;
    }

    std::optional<std::uint64_t> positive(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        const auto& v = j_[key];
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > 0) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() > 0) return std::uint64_t(v.get<std::int64_t>());
        bad(key, "expected a positive integer");
    }

    std::optional<double> positive_real(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        const auto& v = j_[key];
        if (!v.is_number() || !(v.get<double>() > 0)) bad(key, "expected a positive number");
        return v.get<double>();
    }

    std::optional<bool> boolean(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        if (!j_[key].is_boolean()) bad(key, "expected a boolean");
        return j_[key].get<bool>();
    }

    const nlohmann::json* raw(const std::string& key) {
        used_.insert(key);
        return j_.contains(key) ? &j_[key] : nullptr;
    }

    /// Moves every recognized training key into a TrainingConfig.
    TrainingConfig training() {
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [k, v] : j_.items()) {
            if (is_training_key(k)) {
                t[k] = v;
                used_.insert(k);
            }
        }
        try {
            return split_training_config(t);
        } catch (const Error& e) {
            fail(Errc::ConfigValidation, e.what(), e.field());
        }
    }

    void reject_leftovers() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.contains(k)) fail(Errc::ConfigValidation, "unrecognized config key '" + k + "'", k);
        }
    }

    [[noreturn]] static void bad(const std::string& key, const std::string& why) {
        fail(Errc::ConfigValidation, key + ": " + why, key);
    }

private:
    static bool is_training_key(const std::string& k) {
        for (const char* g : kGeneralTrainingKeys) {
            if (k == g) return true;
        }
        for (const char* t : kTaskSpecificTrainingKeys) {
            if (k == t) return true;
        }
        return false;
    }

    const nlohmann::json& j_;
    std::set<std::string> used_;
};

/// provider_url, model, and the dotted provider.* keys.
inline std::shared_ptr<Provider> provider_from(FlatConfig& c, std::size_t default_mock_dim = 32) {
    ProviderEndpoint e;
    e.base_url = c.required_string("provider_url");
    e.model = c.string("model").value_or(is_mock_url(e.base_url) ? "mock" : "");
    if (auto k = c.string("provider.kind")) {
        try {
            e.kind = parse_dialect(*k);
        } catch (const Error& err) {
            FlatConfig::bad("provider.kind", err.what());
        }
    } else if (is_mock_url(e.base_url)) {
        e.kind = Dialect::Mock;
    }
    e.api_key = c.string("provider.api_key");
    if (auto t = c.positive_real("provider.timeout")) e.timeout = std::chrono::duration<double>(*t);
    if (const auto* r = c.raw("provider.max_retries")) {
        if (!r->is_number_unsigned() || r->get<std::uint64_t>() > 5) FlatConfig::bad("provider.max_retries", "expected 0..5");
        e.max_retries = r->get<unsigned>();
    }
    validate_endpoint(e);
    if (e.model.empty()) FlatConfig::bad("model", "is required");
    return make_provider(std::move(e), default_mock_dim);
}

}  // namespace factory_detail

/// Builds a ready-to-use task from a flat config record. All validation
/// happens here.
inline TaskHandle create_task(TaskKind kind, const nlohmann::json& config) {
    using factory_detail::FlatConfig;
    FlatConfig c(config);
    auto done = [&](auto handle) -> TaskHandle {
        c.reject_leftovers();
        return handle;
    };
    try {
        switch (kind) {
            case TaskKind::Generator: {
                GeneratorTask t;
                t.provider = factory_detail::provider_from(c);
                auto journal = c.string("memory_journal");
                t.store = journal ? std::make_shared<ConversationStore>(*journal) : std::make_shared<ConversationStore>();
                t.service = std::make_shared<ChatService>(t.provider, t.store);
                return done(std::move(t));
            }
            case TaskKind::Labeller: {
                LabellerTask t;
                auto provider = factory_detail::provider_from(c);
                const auto* labels = c.raw("labels");
                if (!labels) FlatConfig::bad("labels", "is required");
                // Either [[name, condition], ...] (ordered) or {name: condition}.
                LabelSchema schema;
                if (labels->is_array()) {
                    for (const auto& pair : *labels) {
                        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
                            FlatConfig::bad("labels", "expected [name, condition] pairs");
                        }
                        schema.labels.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
                    }
                } else if (labels->is_object()) {
                    for (const auto& [name, cond] : labels->items()) {
                        if (!cond.is_string()) FlatConfig::bad("labels", "condition for '" + name + "' must be a string");
                        schema.labels.emplace_back(name, cond.get<std::string>());
                    }
                } else {
                    FlatConfig::bad("labels", "expected an object or a list of pairs");
                }
                schema.multi_label = c.boolean("multi_label").value_or(false);
                t.labeller = std::make_shared<Labeller>(provider, validate_label_schema(schema));
                t.concurrency = c.positive("concurrency").value_or(4);
                return done(std::move(t));
            }
            case TaskKind::Embedder: {
                EmbedderTask t;
                t.provider = factory_detail::provider_from(c);
                t.batch_size = c.positive("batch_size").value_or(64);
                return done(std::move(t));
            }
            case TaskKind::Searcher: {
                const auto dim = c.positive("dim");
                if (!dim) FlatConfig::bad("dim", "is required");
                const auto backend = parse_backend(c.string("index_type").value_or("flat"));
                HnswParams p;
                if (auto v = c.positive("M")) p.M = std::uint32_t(*v);
                if (auto v = c.positive("ef_construction")) p.ef_construction = std::uint32_t(*v);
                if (auto v = c.positive("ef_search")) p.ef_search = std::uint32_t(*v);
                if (const auto* s = c.raw("seed")) {
                    if (!s->is_number_integer()) FlatConfig::bad("seed", "expected an integer");
                    p.rng_seed = s->get<std::uint64_t>();
                }
                if (backend == BackendKind::Hnsw) validate_hnsw_params(p);
                return done(SearcherTask{std::make_shared<VectorIndex>(VectorIndex::create(backend, *dim, p))});
            }
            case TaskKind::Reranker: {
                RerankerTask t;
                t.backend = c.string("backend").value_or("embedding");
                std::shared_ptr<RelevanceScorer> scorer;
                if (t.backend == "http") {
                    scorer = std::make_shared<HttpScorer>(c.required_string("provider_url"));
                } else if (t.backend == "llm-judge") {
                    auto provider = factory_detail::provider_from(c);
                    scorer = std::make_shared<LlmJudgeScorer>(provider, c.positive("concurrency").value_or(4));
                } else if (t.backend == "embedding") {
                    scorer = std::make_shared<EmbeddingScorer>(factory_detail::provider_from(c));
                } else {
                    FlatConfig::bad("backend", "expected http, llm-judge or embedding");
                }
                t.reranker = std::make_shared<Reranker>(scorer);
                return done(std::move(t));
            }
            case TaskKind::Mimicker: {
                MimickerTask t;
                t.teacher = factory_detail::provider_from(c);
                t.student = parse_student_kind(c.string("student").value_or("linear"));
                t.in_dim = c.positive("in_dim").value_or(64);
                t.hidden = c.positive("hidden").value_or(64);
                t.training = c.training();
                return done(std::move(t));
            }
            case TaskKind::Classifier: {
                ClassifierTask t;
                t.provider = factory_detail::provider_from(c);
                t.training = c.training();
                return done(std::move(t));
            }
            case TaskKind::TokenizerTrainer: {
                TokenizerConfig t;
                if (auto v = c.positive("max_length")) t.max_length = std::uint32_t(*v);
                if (auto v = c.positive("vocab_size")) t.vocab_size = std::uint32_t(*v);
                if (auto v = c.positive("min_frequency")) t.min_frequency = std::uint32_t(*v);
                validate_tokenizer_config(t);
                return done(TokenizerTrainerTask{t});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::ConfigValidation, e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigValidation || e.code() == Errc::UnknownTaskKind) throw;
        fail(Errc::ConfigValidation, e.what(), e.field());
    }
    fail(Errc::UnknownTaskKind, "unhandled task kind");
}

inline TaskHandle create_task(std::string_view kind, const nlohmann::json& config) {
    return create_task(parse_task_kind(kind), config);
}

}  // namespace lmforge
