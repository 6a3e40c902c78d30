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

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lmforge/tokenizer/bpe.hpp"
#include "lmforge/util/rng.hpp"

namespace lmforge {

inline constexpr std::int64_t kIgnoreLabel = -100;

struct MaskProportions {
    double mask_replace = 0.8;
    double random_replace = 0.1;
    double keep = 0.1;
};

struct MaskingConfig {
    double mlm_probability = 0.15;
    TokenId mask_token_id = TokenizerModel::kMask;
    std::uint64_t rng_seed = 42;
    MaskProportions proportions{};
    // Random replacements are drawn uniformly from [first non-special id, vocab_size).
    std::uint32_t vocab_size = TokenizerModel::kBaseVocab;
};

inline const MaskingConfig& validate_masking_config(const MaskingConfig& c) {
    if (!(c.mlm_probability >= 0.0 && c.mlm_probability <= 1.0)) {
        fail(Errc::ConfigValidation, "mlm_probability must be in [0, 1]", "mlm_probability");
    }
    const auto& p = c.proportions;
    if (p.mask_replace < 0 || p.random_replace < 0 || p.keep < 0 ||
        std::abs(p.mask_replace + p.random_replace + p.keep - 1.0) > 1e-9) {
        fail(Errc::ConfigValidation, "masking proportions must be non-negative and sum to 1", "proportions");
    }
    if (c.vocab_size <= kSpecialTokenCount) fail(Errc::ConfigValidation, "vocab_size too small", "vocab_size");
    return c;
}

struct MaskedBatch {
    std::vector<TokenId> input_ids;
    std::vector<std::int64_t> labels;
};

/// Dynamic masking collator. The generator persists across calls, so the
/// same sequence gets a fresh mask every time it is collated.
class DynamicMasker {
public:
    explicit DynamicMasker(MaskingConfig cfg) : cfg_(validate_masking_config(cfg)), rng_(cfg.rng_seed) {}

    const MaskingConfig& config() const noexcept { return cfg_; }

    MaskedBatch operator()(std::span<const TokenId> ids) {
        MaskedBatch out{{ids.begin(), ids.end()}, std::vector<std::int64_t>(ids.size(), kIgnoreLabel)};
        const auto& p = cfg_.proportions;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (TokenizerModel::is_special(ids[i])) continue;
            // First draw selects, second picks the replacement kind.
            const double select = rng_.uniform();
            const double kind = rng_.uniform();
            if (select >= cfg_.mlm_probability) continue;
            out.labels[i] = ids[i];
            if (kind < p.mask_replace) {
                out.input_ids[i] = cfg_.mask_token_id;
            } else if (kind < p.mask_replace + p.random_replace) {
                out.input_ids[i] =
                    static_cast<TokenId>(kSpecialTokenCount + rng_.below(cfg_.vocab_size - kSpecialTokenCount));
            }
        }
        return out;
    }

private:
    MaskingConfig cfg_;
    Rng rng_;
};

/// One-shot masking with a generator seeded from cfg.rng_seed.
inline MaskedBatch mask_tokens(std::span<const TokenId> ids, const MaskingConfig& cfg) {
    DynamicMasker m(cfg);
    return m(ids);
}

}  // namespace lmforge
