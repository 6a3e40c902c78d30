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

#include "lmforge/core/config.hpp"

using namespace lmforge;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::Precondition;
}

}  // namespace

TEST(SplitTrainingConfig, RoutesMaskingProbabilityToTaskSpecific) {
    const auto cfg = split_training_config(json{{"learning_rate", 1e-4}, {"mlm_probability", 0.15}});
    EXPECT_EQ(cfg.general, (json{{"learning_rate", 1e-4}}));
    EXPECT_EQ(cfg.task_specific, (json{{"mlm_probability", 0.15}}));
}

TEST(SplitTrainingConfig, EmptyInput) {
    const auto cfg = split_training_config(json::object());
    EXPECT_TRUE(cfg.general.empty());
    EXPECT_TRUE(cfg.task_specific.empty());
}

TEST(SplitTrainingConfig, RejectsOutOfRangeAndUnknown) {
    EXPECT_EQ(code_of([] { split_training_config(json{{"mlm_probability", 1.5}}); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([] { split_training_config(json{{"loss_weights", {0.7, 0.7}}}); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([] { split_training_config(json{{"eval_fraction", 1.0}}); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([] { split_training_config(json{{"batch_size", 0}}); }), Errc::InvalidValue);
    try {
        split_training_config(json{{"learning_rate", 0.1}, {"warmup_stepz", 10}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownKey);
        EXPECT_EQ(e.field(), "warmup_stepz");
    }
}

TEST(SplitTrainingConfig, KeySetsDisjointAndComplete) {
    const json raw = {{"learning_rate", 0.5},  {"num_train_epochs", 3},  {"batch_size", 8},
                      {"seed", -7},            {"output_dir", "out"},    {"eval_fraction", 0.25},
                      {"mlm_probability", 0.2}, {"loss_weights", {0.25, 0.75}}};
    const auto cfg = split_training_config(raw);
    EXPECT_EQ(cfg.general.size() + cfg.task_specific.size(), raw.size());
    for (const auto& [k, v] : raw.items()) {
        EXPECT_NE(cfg.general.contains(k), cfg.task_specific.contains(k)) << k;
    }
    EXPECT_EQ(cfg.seed(), -7);
    EXPECT_EQ(cfg.loss_weights(), (std::pair{0.25, 0.75}));
}

TEST(SplitTrainingConfig, UnionHomomorphism) {
    const json a = {{"learning_rate", 0.01}, {"mlm_probability", 0.3}};
    const json b = {{"batch_size", 4}, {"seed", 1}, {"loss_weights", {1.0, 0.0}}};
    json ab = a;
    ab.update(b);
    const auto sa = split_training_config(a);
    const auto sb = split_training_config(b);
    auto merged = sa;
    merged.general.update(sb.general);
    merged.task_specific.update(sb.task_specific);
    EXPECT_EQ(split_training_config(ab), merged);
}

TEST(SplitTrainingConfig, RoundTrip) {
    const auto cfg = split_training_config(
        json{{"learning_rate", 0.02}, {"optim", "sgd"}, {"max_grad_norm", 1.0}, {"mlm_probability", 0.0}});
    EXPECT_EQ(split_training_config(json::parse(cfg.to_json().dump())), cfg);
}

TEST(ModelConfig, Examples) {
    ModelConfig base{50265, 512, 12, 12, 768, 3072};
    EXPECT_EQ(validate_model_config(base), base);

    ModelConfig bad = base;
    bad.hidden_size = 100;
    EXPECT_EQ(code_of([&] { validate_model_config(bad); }), Errc::HeadDivisibility);

    ModelConfig small{1, 1, 8, 1, 64, 1};
    EXPECT_NO_THROW(validate_model_config(small));

    ModelConfig zero = base;
    zero.num_hidden_layers = 0;
    try {
        validate_model_config(zero);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonPositiveField);
        EXPECT_EQ(e.field(), "num_hidden_layers");
    }
}

TEST(ModelConfig, RoundTrip) {
    ModelConfig c{30000, 128, 4, 2, 256, 1024};
    EXPECT_EQ(model_config_from_json(json::parse(to_json(c).dump())), c);
    EXPECT_EQ(code_of([] { model_config_from_json(json{{"hiddn_size", 4}}); }), Errc::UnknownKey);
}

TEST(TokenizerConfig, FloorAndRoundTrip) {
    EXPECT_EQ(code_of([] { validate_tokenizer_config({512, 261, 2}); }), Errc::ConfigValidation);
    EXPECT_NO_THROW(validate_tokenizer_config({512, 262, 2}));
    EXPECT_EQ(code_of([] { validate_tokenizer_config({512, 1000, 0}); }), Errc::ConfigValidation);
    TokenizerConfig c{64, 500, 3};
    EXPECT_EQ(tokenizer_config_from_json(json::parse(to_json(c).dump())), c);
}
