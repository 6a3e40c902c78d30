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

#include <functional>
#include <thread>

#include "lmforge/providers/mock_provider.hpp"
#include "lmforge/reranker/reranker.hpp"
#include "lmforge/util/rng.hpp"

using namespace lmforge;
using nlohmann::json;

namespace {

class FnScorer final : public RelevanceScorer {
public:
    using Fn = std::function<std::vector<double>(const std::string&, const std::vector<std::string>&)>;
    explicit FnScorer(Fn fn) : fn_(std::move(fn)) {}
    std::string backend() const override { return "test"; }
    std::vector<double> score(const std::string& q, const std::vector<std::string>& d) override { return fn_(q, d); }

private:
    Fn fn_;
};

// Sort oracle: full sort of (score desc, index asc) pairs.
std::vector<std::size_t> sort_oracle(const std::vector<double>& s) {
    std::vector<std::pair<double, std::size_t>> p;
    for (std::size_t i = 0; i < s.size(); ++i) p.emplace_back(-s[i], i);
    std::sort(p.begin(), p.end());
    std::vector<std::size_t> out;
    for (const auto& [neg, i] : p) out.push_back(i);
    return out;
}

const std::string kQuery = "Where is Mount Everest?";
const std::vector<std::string> kDocs = {"Where is Mount Everest?", "Mount Everest is in Nepal."};

}  // namespace

TEST(Rerank, PermutationPropertyAgainstSortOracle) {
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<double> s(n);
        for (auto& x : s) x = double(rng.below(8)) / 7.0;  // many ties
        std::vector<std::string> docs(n, "d");
        std::optional<std::size_t> top_n;
        if (trial % 3 == 0) top_n = 1 + rng.below(n);
        Reranker r(std::make_shared<FnScorer>([&](auto&, auto&) { return s; }));
        const auto res = r.rerank({"q", docs, top_n});
        auto expected = sort_oracle(s);
        if (top_n) expected.resize(*top_n);
        std::vector<std::size_t> got;
        for (const auto& d : res.ranking) got.push_back(d.index);
        ASSERT_EQ(got, expected) << "trial " << trial;
        for (std::size_t i = 0; i + 1 < res.ranking.size(); ++i) EXPECT_GE(res.ranking[i].score, res.ranking[i + 1].score);
    }
}

TEST(Rerank, EverestAnswerFirstUnderRelevanceScorer) {
    Reranker r(std::make_shared<FnScorer>([](const std::string& q, const std::vector<std::string>& docs) {
        std::vector<double> s;
        for (const auto& d : docs) s.push_back(d == q ? 0.1 : (d.find("Nepal") != std::string::npos ? 0.9 : 0.0));
        return s;
    }));
    const auto res = r.rerank({kQuery, kDocs, std::nullopt});
    EXPECT_EQ(res.ranking[0].text, "Mount Everest is in Nepal.");
    EXPECT_EQ(res.ranking[0].index, 1u);
}

TEST(Rerank, LlmJudgeCorrectsSurfaceSimilarity) {
    auto mock = std::make_shared<MockProvider>(3, 16);
    mock->script("Document: Mount Everest is in Nepal.", {"95"});
    mock->script("Document: Where is Mount Everest?", {"20"});
    Reranker judge(std::make_shared<LlmJudgeScorer>(mock, 2));
    const auto res = judge.rerank({kQuery, kDocs, std::nullopt});
    EXPECT_EQ(res.backend, "llm-judge");
    EXPECT_EQ(res.ranking[0].index, 1u);
    EXPECT_DOUBLE_EQ(res.ranking[0].score, 0.95);
    EXPECT_DOUBLE_EQ(res.ranking[1].score, 0.20);
    for (const auto& req : mock->recorded_requests()) {
        EXPECT_EQ(req.params.temperature, 0.0);
        EXPECT_EQ(req.messages[0].content, kJudgeRubric);
    }
    // Cosine alone prefers the duplicated question.
    Reranker emb(std::make_shared<EmbeddingScorer>(mock));
    EXPECT_EQ(emb.rerank({kQuery, kDocs, std::nullopt}).ranking[0].index, 0u);
}

TEST(Rerank, JudgeRetryAndFailure) {
    auto mock = std::make_shared<MockProvider>();
    mock->script("Document: flaky", {"very relevant", "70"});
    mock->script("Document: hopeless", {"I cannot say"});
    LlmJudgeScorer judge(mock, 1);
    EXPECT_EQ(judge.score("q", {"flaky"}), (std::vector<double>{0.7}));
    try {
        judge.score("q", {"flaky", "hopeless"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnparsableScore);
        EXPECT_EQ(e.position(), 1u);
    }
    EXPECT_EQ(parse_judge_score(" 42.\n"), 42);
    EXPECT_FALSE(parse_judge_score("101"));
    EXPECT_FALSE(parse_judge_score("-1"));
    EXPECT_FALSE(parse_judge_score("4 2"));
}

TEST(Rerank, JudgeConcurrencyBounded) {
    auto mock = std::make_shared<MockProvider>();
    mock->set_default_reply("50");
    mock->set_latency(std::chrono::milliseconds(10));
    LlmJudgeScorer judge(mock, 3);
    const auto s = judge.score("q", std::vector<std::string>(12, "doc"));
    EXPECT_EQ(s.size(), 12u);
    EXPECT_LE(mock->max_in_flight(), 3u);
}

TEST(Rerank, TrivialCasesAndErrors) {
    auto equal = std::make_shared<FnScorer>([](auto&, const std::vector<std::string>& d) {
        return std::vector<double>(d.size(), 0.5);
    });
    Reranker r(equal);
    const auto single = r.rerank({"q", {"only"}, std::nullopt});
    ASSERT_EQ(single.ranking.size(), 1u);
    EXPECT_EQ(single.ranking[0].index, 0u);
    const auto ties = r.rerank({"q", {"a", "b", "c"}, std::nullopt});
    EXPECT_EQ(ties.ranking[2].index, 2u);
    EXPECT_THROW(r.rerank({"q", {}, std::nullopt}), Error);
    EXPECT_THROW(r.rerank({"q", {"a"}, 2}), Error);

    Reranker short_scores(std::make_shared<FnScorer>([](auto&, auto&) { return std::vector<double>{1.0}; }));
    try {
        short_scores.rerank({"q", {"a", "b"}, std::nullopt});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ScoreCountMismatch);
    }
}

TEST(Rerank, EmbeddingFallbackMatchesCosineOrder) {
    auto mock = std::make_shared<MockProvider>(11, 24);
    const std::vector<std::string> docs = {"alpha one", "beta two", "alpha three", "gamma", "beta four"};
    const auto res = Reranker(std::make_shared<EmbeddingScorer>(mock)).rerank({"alpha query", docs, std::nullopt});
    std::vector<double> cos;
    const EmbeddingVector q(mock_embedding(11, 24, "alpha query"));
    for (const auto& d : docs) cos.push_back(cosine(q, EmbeddingVector(mock_embedding(11, 24, d))));
    std::vector<std::size_t> got;
    for (const auto& d : res.ranking) got.push_back(d.index);
    EXPECT_EQ(got, sort_oracle(cos));
}

TEST(Rerank, HttpScorerWireContract) {
    httplib::Server srv;
    json seen;
    srv.Post("/v2/score", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        res.set_content(R"({"scores": [0.1, 0.8, 0.3]})", "application/json");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    HttpScorer scorer("http://127.0.0.1:" + std::to_string(port) + "/v2");
    const auto res = Reranker(std::shared_ptr<RelevanceScorer>(&scorer, [](auto*) {})).rerank({"q", {"a", "b", "c"}, 2});
    EXPECT_EQ(seen, (json{{"query", "q"}, {"documents", {"a", "b", "c"}}}));
    ASSERT_EQ(res.ranking.size(), 2u);
    EXPECT_EQ(res.ranking[0].index, 1u);
    EXPECT_EQ(res.ranking[1].index, 2u);
    EXPECT_EQ(res.backend, "http-scorer");
    try {
        Reranker(std::shared_ptr<RelevanceScorer>(&scorer, [](auto*) {})).rerank({"q", {"a", "b"}, std::nullopt});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ScoreCountMismatch);
    }
    srv.stop();
    t.join();
}
