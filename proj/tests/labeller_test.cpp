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

#include "lmforge/labeller/labeller.hpp"
#include "lmforge/providers/mock_provider.hpp"

using namespace lmforge;

namespace {

LabelSchema sentiment() {
    return {{{"positive", "expresses satisfaction"}, {"negative", "expresses dissatisfaction"}}, false};
}

LabelSchema ticket_topics() {
    return {{{"urgent", "needs action today"}, {"billing", "about invoices or payments"}, {"other", "anything else"}},
            true};
}

}  // namespace

TEST(Labeller, SingleLabel) {
    auto mock = std::make_shared<MockProvider>();
    mock->script("I love this product", {R"(["positive"])"});
    Labeller l(mock, sentiment());
    const auto r = l.label("I love this product");
    EXPECT_EQ(r.labels, (std::vector<std::string>{"positive"}));
    EXPECT_EQ(r.raw_response, R"(["positive"])");
    EXPECT_EQ(r.retries, 0u);
    const auto sent = mock->recorded_requests().at(0);
    EXPECT_EQ(sent.params.temperature, 0.0);
    EXPECT_EQ(sent.messages.size(), 2u);
    EXPECT_EQ(sent.messages[1].content, "I love this product");
}

TEST(Labeller, MultiLabelInSchemaOrder) {
    auto mock = std::make_shared<MockProvider>();
    mock->script("refund", {R"(["billing", "urgent"])"});
    Labeller l(mock, ticket_topics());
    EXPECT_EQ(l.label("refund me now").labels, (std::vector<std::string>{"urgent", "billing"}));
}

TEST(Labeller, RetryThenSuccess) {
    auto mock = std::make_shared<MockProvider>();
    mock->script("great", {"maybe positive?", R"(["positive"])"});
    Labeller l(mock, sentiment());
    const auto r = l.label("great stuff");
    EXPECT_EQ(r.labels, (std::vector<std::string>{"positive"}));
    EXPECT_EQ(r.retries, 1u);
    EXPECT_EQ(mock->chat_calls(), 2u);
    const auto retry = mock->recorded_requests().at(1).messages;
    ASSERT_EQ(retry.size(), 4u);
    EXPECT_EQ(retry[2], (ChatMessage{Role::Assistant, "maybe positive?"}));
    EXPECT_EQ(retry[3].content, kLabelCorrection);
}

TEST(Labeller, WrongCardinalityIsRetried) {
    auto mock = std::make_shared<MockProvider>();
    mock->script("mixed", {R"(["positive","negative"])", R"(["negative"])"});
    Labeller l(mock, sentiment());
    EXPECT_EQ(l.label("mixed feelings").labels, (std::vector<std::string>{"negative"}));
}

TEST(Labeller, UnparsableAfterRetry) {
    auto mock = std::make_shared<MockProvider>();
    mock->script("meh", {"no idea"});
    Labeller l(mock, sentiment());
    try {
        l.label("meh");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnparsableResponse);
    }
    EXPECT_EQ(mock->chat_calls(), 2u);
}

TEST(Labeller, HallucinatedLabelRejected) {
    auto mock = std::make_shared<MockProvider>();
    mock->script("ok", {R"(["neutral"])"});
    Labeller l(mock, sentiment());
    try {
        l.label("it is ok");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownLabelInResponse);
        EXPECT_EQ(e.field(), "neutral");
    }
}

TEST(Labeller, PromptIsDeterministic) {
    EXPECT_EQ(label_prompt(sentiment(), "x"), label_prompt(sentiment(), "x"));
    const auto sys = label_prompt(ticket_topics(), "x")[0].content;
    EXPECT_LT(sys.find("urgent: needs action today"), sys.find("billing: about invoices"));
    EXPECT_NE(sys.find("JSON array"), std::string::npos);
}

TEST(Labeller, SchemaValidation) {
    auto mock = std::make_shared<MockProvider>();
    EXPECT_THROW(Labeller(mock, LabelSchema{{{"only", "one"}}, false}), Error);
    EXPECT_NO_THROW(Labeller(mock, LabelSchema{{{"only", "one"}}, true}));
    EXPECT_THROW(Labeller(mock, LabelSchema{{{"a", "x"}, {"a", "y"}}, false}), Error);
    EXPECT_THROW(Labeller(mock, LabelSchema{{{"a", "x"}, {" ", "y"}}, false}), Error);
    const auto s = label_schema_from_json(R"({"labels": {"zeta": "z", "alpha": "a"}, "multi_label": true})");
    EXPECT_EQ(s.labels[0].first, "zeta");
    EXPECT_TRUE(s.multi_label);
    EXPECT_THROW(label_schema_from_json(R"({"labels": {"a": "x", "b": "y"}, "multi": true})"), Error);
}

TEST(Labeller, BatchWithPoisonedItem) {
    auto mock = std::make_shared<MockProvider>();
    mock->set_latency(std::chrono::milliseconds(15));
    mock->script("POISON", {"{{{not json"});
    mock->set_default_reply(R"(["positive"])");
    Labeller l(mock, sentiment());
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back(i == 6 ? "POISON pill" : "text " + std::to_string(i));
    const auto out = l.label_batch(texts, 3);
    ASSERT_EQ(out.size(), 10u);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].result) {
            ++ok;
            EXPECT_EQ(out[i].result->text, texts[i]);
        } else {
            EXPECT_EQ(i, 6u);
            EXPECT_EQ(out[i].error_code, Errc::UnparsableResponse);
        }
    }
    EXPECT_EQ(ok, 9u);
    EXPECT_LE(mock->max_in_flight(), 3u);
    EXPECT_GE(mock->max_in_flight(), 2u);
    EXPECT_THROW(l.label_batch({}, 3), Error);

    const auto csv = parse_csv_table(label_results_csv(out, texts));
    EXPECT_EQ(csv.header, (CsvRow{"text", "labels", "raw_response", "error"}));
    EXPECT_EQ(csv.rows[0][1], "positive");
    EXPECT_FALSE(csv.rows[6][3].empty());
}

TEST(Csv, QuotedFieldsRoundTrip) {
    const std::vector<CsvRow> rows = {{"a", "b,c", "say \"hi\""}, {"multi\nline", "", " padded "}};
    std::string text;
    for (const auto& r : rows) text += csv_line(r);
    EXPECT_EQ(parse_csv(text), rows);
    EXPECT_EQ(parse_csv("x,y\n1,2"), (std::vector<CsvRow>{{"x", "y"}, {"1", "2"}}));
    EXPECT_THROW(parse_csv("\"open,2\n"), Error);
    EXPECT_THROW(parse_csv("a\"b\n"), Error);
    EXPECT_THROW(parse_csv_table("a,b\n1\n"), Error);
    try {
        parse_csv_table("a,b\n1,2\n").column("text");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MissingColumn);
    }
}
