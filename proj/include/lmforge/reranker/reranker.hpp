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
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lmforge/util/http.hpp"
#include <nlohmann/json.hpp>

#include "lmforge/embeddings/embeddings.hpp"
#include "lmforge/providers/http_provider.hpp"
#include "lmforge/providers/provider.hpp"

namespace lmforge {

/// Indices sorted by score descending, ties by ascending index, cut to top_n.
inline std::vector<std::size_t> rank_by_scores(std::span<const double> scores,
                                               std::optional<std::size_t> top_n = std::nullopt) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    if (top_n && *top_n < idx.size()) idx.resize(*top_n);
    return idx;
}

struct RerankRequest {
    std::string query;
    std::vector<std::string> documents;
    std::optional<std::size_t> top_n;
};

struct RankedDocument {
    std::size_t index = 0;
    double score = 0.0;
    std::string text;
};

struct RerankResult {
    std::vector<RankedDocument> ranking;
    std::string backend;
};

/// Pointwise relevance scorer: one finite score per document, input order.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual std::string backend() const = 0;
    virtual std::vector<double> score(const std::string& query, const std::vector<std::string>& documents) = 0;
};

inline void validate_rerank_request(const RerankRequest& r) {
    if (is_blank(r.query)) fail(Errc::Precondition, "query must be non-empty", "query");
    if (r.documents.empty()) fail(Errc::Precondition, "documents must be non-empty", "documents");
    if (r.top_n && (*r.top_n == 0 || *r.top_n > r.documents.size())) {
        fail(Errc::Precondition, "top_n must lie in [1, number of documents]", "top_n");
    }
}

class Reranker {
public:
    explicit Reranker(std::shared_ptr<RelevanceScorer> scorer) : scorer_(std::move(scorer)) {
        require(scorer_ != nullptr, "reranker needs a scorer");
    }

    const RelevanceScorer& scorer() const noexcept { return *scorer_; }

    RerankResult rerank(const RerankRequest& req) const {
        validate_rerank_request(req);
        const auto scores = scorer_->score(req.query, req.documents);
        if (scores.size() != req.documents.size()) {
            fail(Errc::ScoreCountMismatch, "scorer returned " + std::to_string(scores.size()) + " scores for " +
                                               std::to_string(req.documents.size()) + " documents");
        }
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (!std::isfinite(scores[i])) fail(Errc::UnparsableScore, "non-finite score", "scores", i);
        }
        RerankResult out{{}, scorer_->backend()};
        for (auto i : rank_by_scores(scores, req.top_n)) out.ranking.push_back({i, scores[i], req.documents[i]});
        return out;
    }

private:
    std::shared_ptr<RelevanceScorer> scorer_;
};

// ---------------------------------------------------------------------------
// http-scorer: POST {base}/score {"query", "documents"} -> {"scores": [...]}
// ---------------------------------------------------------------------------

class HttpScorer final : public RelevanceScorer {
public:
    explicit HttpScorer(std::string base_url, std::chrono::duration<double> timeout = std::chrono::seconds(60),
                        std::optional<std::string> api_key = std::nullopt)
        : base_url_(std::move(base_url)), url_(parse_base_url(base_url_)), timeout_(timeout),
          api_key_(std::move(api_key)) {
        if (!(timeout_.count() > 0)) fail(Errc::ConfigValidation, "timeout must be > 0", "timeout");
    }

    std::string backend() const override { return "http-scorer"; }

    std::vector<double> score(const std::string& query, const std::vector<std::string>& documents) override {
        httplib::Client client(url_.origin);
        const auto secs = timeout_.count();
        const auto whole = static_cast<time_t>(secs);
        const auto usec = static_cast<time_t>((secs - double(whole)) * 1e6);
        client.set_connection_timeout(whole, usec);
        client.set_read_timeout(whole, usec);
        httplib::Headers headers;
        if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
        const nlohmann::json body = {{"query", query}, {"documents", documents}};
        auto res = client.Post(url_.path_prefix + "/score", headers, body.dump(), "application/json");
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::Read) fail(Errc::Timeout, "scorer " + base_url_ + " did not answer in time");
            fail(Errc::ProviderUnreachable, "scorer " + base_url_ + ": " + httplib::to_string(err));
        }
        if (res->status < 200 || res->status >= 300) {
            fail(Errc::ProviderHttpError, "scorer HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                 std::to_string(res->status));
        }
        const auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
            fail(Errc::ProviderHttpError, "scorer reply lacks a scores array");
        }
        std::vector<double> scores;
        for (std::size_t i = 0; i < j["scores"].size(); ++i) {
            const auto& v = j["scores"][i];
            if (!v.is_number()) fail(Errc::UnparsableScore, "score is not a number", "scores", i);
            scores.push_back(v.get<double>());
        }
        return scores;
    }

private:
    std::string base_url_;
    ParsedUrl url_;
    std::chrono::duration<double> timeout_;
    std::optional<std::string> api_key_;
};

// ---------------------------------------------------------------------------
// llm-judge: one rubric prompt per document, integer 0-100 mapped to [0, 1]
// ---------------------------------------------------------------------------

inline constexpr std::string_view kJudgeRubricVersion = "judge-rubric-v1";

inline constexpr std::string_view kJudgeRubric =
    "You are a relevance judge. Rate how well the document answers or satisfies the query.\n"
    "Scale: 0 = unrelated; 25 = same topic but does not address the query; 50 = partially addresses it; "
    "75 = mostly answers it; 100 = fully and directly answers it.\n"
    "Judge relevance, not wording overlap: a document that merely repeats the query is not an answer.\n"
    "Reply with a single integer from 0 to 100 and nothing else.";

inline constexpr std::string_view kJudgeCorrection = "Reply with only one integer from 0 to 100.";

inline std::vector<ChatMessage> judge_prompt(const std::string& query, const std::string& document) {
    return {{Role::System, std::string(kJudgeRubric)},
            {Role::User, "Query: " + query + "\n\nDocument: " + document}};
}

/// Integer 0-100 (surrounding whitespace and a trailing period allowed).
inline std::optional<int> parse_judge_score(std::string_view reply) {
    auto s = trim(reply);
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    int v = -1;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 0 || v > 100) return std::nullopt;
    return v;
}

class LlmJudgeScorer final : public RelevanceScorer {
public:
    explicit LlmJudgeScorer(std::shared_ptr<Provider> provider, std::size_t concurrency = 4)
        : provider_(std::move(provider)), concurrency_(concurrency) {
        require(provider_ != nullptr, "judge needs a provider");
        if (concurrency_ == 0) fail(Errc::ConfigValidation, "concurrency must be positive", "concurrency");
        params_.temperature = 0.0;
        params_.top_p = 1.0;
        params_.max_length = 8;
    }

    std::string backend() const override { return "llm-judge"; }

    std::vector<double> score(const std::string& query, const std::vector<std::string>& documents) override {
        std::vector<double> scores(documents.size());
        std::vector<std::exception_ptr> errors(documents.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next++) < documents.size();) {
                try {
                    scores[i] = judge(query, documents[i], i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(concurrency_, documents.size()); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
        return scores;
    }

private:
    double judge(const std::string& query, const std::string& document, std::size_t index) const {
        auto messages = judge_prompt(query, document);
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto c = complete(*provider_, messages, params_);
            if (c.finish_reason == FinishReason::Error) {
                fail(Errc::ProviderHttpError, "judge request failed mid-stream: " + c.error);
            }
            if (const auto v = parse_judge_score(c.text)) return *v / 100.0;
            messages.push_back({Role::Assistant, c.text});
            messages.push_back({Role::User, std::string(kJudgeCorrection)});
        }
        fail(Errc::UnparsableScore, "judge reply for document " + std::to_string(index) + " is not an integer 0-100",
             "documents", index);
    }

    std::shared_ptr<Provider> provider_;
    std::size_t concurrency_;
    GenerationParams params_;
};

// ---------------------------------------------------------------------------
// embedding-fallback: cosine(query, document)
// ---------------------------------------------------------------------------

class EmbeddingScorer final : public RelevanceScorer {
public:
    explicit EmbeddingScorer(std::shared_ptr<Provider> provider) : provider_(std::move(provider)) {
        require(provider_ != nullptr, "embedding scorer needs a provider");
    }

    std::string backend() const override { return "embedding-fallback"; }

    std::vector<double> score(const std::string& query, const std::vector<std::string>& documents) override {
        std::vector<std::string> texts;
        texts.reserve(documents.size() + 1);
        texts.push_back(query);
        texts.insert(texts.end(), documents.begin(), documents.end());
        const auto vecs = embed(*provider_, texts);
        const EmbeddingVector q(vecs[0]);
        std::vector<double> scores;
        for (std::size_t i = 1; i < vecs.size(); ++i) scores.push_back(cosine(q, EmbeddingVector(vecs[i])));
        return scores;
    }

private:
    std::shared_ptr<Provider> provider_;
};

}  // namespace lmforge
