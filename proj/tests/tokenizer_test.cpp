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

#include "bpe_oracle.hpp"
#include "lmforge/tokenizer/masking.hpp"
#include "test_util.hpp"

using namespace lmforge;

namespace {

using Lines = std::vector<std::string>;


void expect_matches_oracle(const Lines& corpus, std::uint32_t vocab_size, std::uint32_t min_freq) {
    const auto model = train_bpe(corpus, {512, vocab_size, min_freq});
    const auto steps = oracle::train(corpus, vocab_size, min_freq);
    ASSERT_EQ(model.merges().size(), steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto [l, r] = model.merges()[i];
        EXPECT_EQ(model.token_string(l), steps[i].left) << "step " << i;
        EXPECT_EQ(model.token_string(r), steps[i].right) << "step " << i;
    }
    EXPECT_LE(model.vocab_size(), vocab_size);
}

std::string random_printable(Rng& rng, std::size_t max_len) {
    const std::size_t n = rng.below(max_len + 1);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = rng.below(100);
        if (r < 15) s += " \t\n"[rng.below(3)];
        else s += char(0x21 + rng.below(0x7E - 0x21 + 1));
    }
    return s;
}

}  // namespace

TEST(Bpe, LowLowerLowestFirstMerges) {
    const Lines corpus = {"low low low lower lowest"};
    const auto base = TokenizerModel::kBaseVocab;
    const auto model = train_bpe(corpus, {512, base + 3, 2});
    ASSERT_EQ(model.merges().size(), 3u);
    // l,o (count 5) beats o,w (5) by left symbol; then lo,w; then low,marker.
    EXPECT_EQ(model.token_string(model.merges()[0].first), "l");
    EXPECT_EQ(model.token_string(model.merges()[0].second), "o");
    EXPECT_EQ(model.token_string(base), "lo");
    EXPECT_EQ(model.token_string(base + 1), "low");
    EXPECT_EQ(model.token_string(base + 2), "low\xE2\x96\x81");
    expect_matches_oracle(corpus, base + 3, 2);
}

TEST(Bpe, OracleEquivalenceOnToyCorpora) {
    expect_matches_oracle({"low low low lower lowest"}, 400, 2);
    expect_matches_oracle({"aaaa aaaa"}, 400, 1);
    expect_matches_oracle({"the cat sat on the mat", "the dog sat on the log", "<s> </s> <mask> tokens",
                           "caf\xC3\xA9 na\xC3\xAFve r\xC3\xA9sum\xC3\xA9"},
                          420, 1);
}

TEST(Bpe, RepeatedWordCollapsesToOneToken) {
    const auto model = train_bpe(Lines{"aaaa aaaa"}, {512, 400, 1});
    const auto ids = model.encode("aaaa");
    ASSERT_EQ(ids.size(), 3u);
    EXPECT_EQ(model.token_string(ids[1]), "aaaa\xE2\x96\x81");
}

TEST(Bpe, ThresholdExhaustion) {
    const auto model = train_bpe(Lines{"low low low lower lowest"}, {512, 1000, 100});
    EXPECT_TRUE(model.merges().empty());
    EXPECT_EQ(model.vocab_size(), TokenizerModel::kBaseVocab);
}

TEST(Bpe, SpecialsNeverProduced) {
    const auto model = train_bpe(Lines{"<s> <s> <s> <s>"}, {512, 300, 1});
    for (TokenId id = TokenizerModel::kBaseVocab; id < model.vocab_size(); ++id) {
        EXPECT_NE(model.token_string(id), "<s>");
    }
    EXPECT_EQ(model.decode(model.encode("<s> <s>")), "<s> <s>");
}

TEST(Bpe, Errors) {
    EXPECT_THROW(train_bpe(Lines{"  ", ""}, {}), Error);
    try {
        train_bpe(Lines{}, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyCorpus);
    }
    try {
        train_bpe(Lines{"a"}, {512, 10, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ConfigValidation);
    }
}

TEST(Bpe, Determinism) {
    const Lines corpus = {"one two three two one", "three three two"};
    EXPECT_EQ(train_bpe(corpus, {512, 300, 1}).merges(), train_bpe(corpus, {512, 300, 1}).merges());
}

TEST(Encode, EmptyAndTruncation) {
    const auto model = train_bpe(Lines{"abc abd"}, {512, 300, 1});
    EXPECT_EQ(model.encode(""), (std::vector<TokenId>{TokenizerModel::kBos, TokenizerModel::kEos}));
    const std::vector<TokenId> be = {TokenizerModel::kBos, TokenizerModel::kEos};
    EXPECT_EQ(model.decode(be), "");
    const auto ids = model.encode("xyz qrs tuv wxy zzz", 6);
    ASSERT_EQ(ids.size(), 6u);
    EXPECT_EQ(ids.back(), TokenizerModel::kEos);
    EXPECT_EQ(ids.front(), TokenizerModel::kBos);
}

TEST(Decode, UnknownTokenId) {
    const auto model = train_bpe(Lines{"abc"}, {512, 300, 1});
    const std::vector<TokenId> ids = {2, static_cast<TokenId>(model.vocab_size())};
    try {
        model.decode(ids);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownTokenId);
        EXPECT_EQ(e.position(), 1u);
    }
}

TEST(Encode, RoundTripRandomPrintable) {
    Rng rng(7);
    Lines corpus;
    for (int i = 0; i < 200; ++i) corpus.push_back(random_printable(rng, 60));
    const auto model = train_bpe(corpus, {100000, 1500, 2});
    for (int i = 0; i < 1000; ++i) {
        const auto text = random_printable(rng, 80);
        const auto ids = model.encode(text, 100000);
        EXPECT_EQ(model.decode(ids), oracle::canonicalize(text));
        EXPECT_EQ(model.encode(model.decode(ids), 100000), ids);
    }
}

TEST(Encode, NonAsciiBytes) {
    const auto model = train_bpe(Lines{"na\xC3\xAFve \xF0\x9F\x98\x80 \x01\x7F"}, {512, 300, 1});
    const std::string text = "\xF0\x9F\x98\x80 na\xC3\xAFve \xFF";
    EXPECT_EQ(model.decode(model.encode(text)), text);
}

TEST(Persistence, SaveLoadRoundTrip) {
    lmforge::testing::TempDir dir;
    Lines corpus = {"the quick brown fox", "jumps over the lazy dog", "the dog <s> sleeps", "\xC3\xA9t\xC3\xA9 \xC3\xA9t\xC3\xA9"};
    const auto model = train_bpe(corpus, {128, 330, 1});
    model.save(dir.path());
    const auto loaded = TokenizerModel::load(dir.path());
    EXPECT_EQ(loaded.merges(), model.merges());
    EXPECT_EQ(loaded.vocab_size(), model.vocab_size());
    EXPECT_EQ(loaded.config(), model.config());
    for (const auto& line : corpus) EXPECT_EQ(loaded.encode(line), model.encode(line));

    const auto vocab = json::parse(read_file(dir.path() / "vocab.json"));
    EXPECT_EQ(vocab["<pad>"], 0);
    EXPECT_EQ(vocab["<mask>"], 4);
    EXPECT_EQ(vocab.size(), model.vocab_size());
    const auto merges = read_file(dir.path() / "merges.txt");
    EXPECT_EQ(merges.rfind("#version", 0), 0u);
}

TEST(Persistence, RejectsInconsistentFiles) {
    lmforge::testing::TempDir dir;
    const auto model = train_bpe(Lines{"abc abc abd"}, {512, 300, 1});
    model.save(dir.path());
    write_file(dir.path() / "merges.txt", std::string("#version: x\nq \xE2\x96\x81\n"));
    EXPECT_THROW(TokenizerModel::load(dir.path()), Error);
}

// --- masking ---------------------------------------------------------------

TEST(Masking, ZeroProbabilityIsIdentity) {
    const std::vector<TokenId> ids = {2, 10, 11, 300, 3};
    MaskingConfig cfg;
    cfg.mlm_probability = 0.0;
    cfg.vocab_size = 400;
    const auto out = mask_tokens(ids, cfg);
    EXPECT_EQ(out.input_ids, ids);
    for (auto l : out.labels) EXPECT_EQ(l, kIgnoreLabel);
}

TEST(Masking, DegenerateAllMask) {
    const std::vector<TokenId> ids = {2, 10, 11, 0, 300, 3};
    MaskingConfig cfg;
    cfg.mlm_probability = 1.0;
    cfg.proportions = {1.0, 0.0, 0.0};
    cfg.vocab_size = 400;
    const auto out = mask_tokens(ids, cfg);
    EXPECT_EQ(out.input_ids, (std::vector<TokenId>{2, 4, 4, 0, 4, 3}));
    EXPECT_EQ(out.labels, (std::vector<std::int64_t>{-100, 10, 11, -100, 300, -100}));
}

TEST(Masking, Statistics) {
    Rng data(3);
    std::vector<TokenId> ids(100000);
    for (auto& id : ids) id = TokenId(5 + data.below(995));
    for (std::size_t i = 0; i < ids.size(); i += 50) ids[i] = TokenId(data.below(5));
    MaskingConfig cfg;
    cfg.vocab_size = 1000;
    cfg.rng_seed = 11;
    const auto out = mask_tokens(ids, cfg);
    std::size_t eligible = 0, selected = 0, masked = 0, kept = 0, replaced = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 5) {
            EXPECT_EQ(out.input_ids[i], ids[i]);
            EXPECT_EQ(out.labels[i], kIgnoreLabel);
            continue;
        }
        ++eligible;
        if (out.labels[i] == kIgnoreLabel) {
            EXPECT_EQ(out.input_ids[i], ids[i]);
            continue;
        }
        ++selected;
        EXPECT_EQ(out.labels[i], ids[i]);
        if (out.input_ids[i] == cfg.mask_token_id) ++masked;
        else if (out.input_ids[i] == ids[i]) ++kept;
        else ++replaced;
        EXPECT_GE(out.input_ids[i], 4u);
        EXPECT_LT(out.input_ids[i], 1000u);
    }
    // A random replacement can land on the original id; that shows up as
    // "kept" with probability 1/995 and stays well inside the tolerance.
    EXPECT_NEAR(double(selected) / eligible, 0.15, 0.005);
    EXPECT_NEAR(double(masked) / selected, 0.8, 0.01);
    EXPECT_NEAR(double(replaced) / selected, 0.1, 0.01);
    EXPECT_NEAR(double(kept) / selected, 0.1, 0.01);
}

TEST(Masking, SeedDeterministicAndDynamic) {
    std::vector<TokenId> ids(200, 42);
    MaskingConfig cfg;
    cfg.vocab_size = 100;
    EXPECT_EQ(mask_tokens(ids, cfg).input_ids, mask_tokens(ids, cfg).input_ids);
    DynamicMasker m(cfg);
    EXPECT_NE(m(ids).labels, m(ids).labels);
}

TEST(Masking, InvalidConfig) {
    MaskingConfig cfg;
    cfg.mlm_probability = 1.2;
    EXPECT_THROW(DynamicMasker{cfg}, Error);
    cfg.mlm_probability = 0.1;
    cfg.proportions = {0.5, 0.1, 0.1};
    EXPECT_THROW(DynamicMasker{cfg}, Error);
}
