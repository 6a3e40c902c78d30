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
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

#include "lmforge/util/error.hpp"

namespace lmforge {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Training configuration
// ---------------------------------------------------------------------------

/// Unified training dictionary, split into trainer-level keys and keys that
/// belong to a specific component (currently the masking collator and the
/// distillation loss).
struct TrainingConfig {
    json general = json::object();
    json task_specific = json::object();

    double learning_rate() const { return general.value("learning_rate", 0.01); }
    std::uint32_t num_train_epochs() const { return general.value("num_train_epochs", 10u); }
    std::uint32_t batch_size() const { return general.value("batch_size", 32u); }
    std::int64_t seed() const { return general.value("seed", std::int64_t{42}); }
    std::string output_dir() const { return general.value("output_dir", std::string(".")); }
    double eval_fraction() const { return general.value("eval_fraction", 0.2); }
    std::string optim() const { return general.value("optim", std::string("adam")); }
    std::optional<double> max_grad_norm() const {
        if (auto it = general.find("max_grad_norm"); it != general.end()) return it->get<double>();
        return std::nullopt;
    }

    double mlm_probability() const { return task_specific.value("mlm_probability", 0.15); }
    std::pair<double, double> loss_weights() const {
        if (auto it = task_specific.find("loss_weights"); it != task_specific.end()) {
            return {(*it)[0].get<double>(), (*it)[1].get<double>()};
        }
        return {0.5, 0.5};
    }

    json to_json() const {
        json out = general;
        for (const auto& [k, v] : task_specific.items()) out[k] = v;
        return out;
    }

    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

namespace config_detail {

[[noreturn]] inline void invalid(const std::string& key, const std::string& reason) {
    fail(Errc::InvalidValue, key + ": " + reason, key);
}

inline double positive_real(const std::string& key, const json& v) {
    if (!v.is_number()) invalid(key, "expected a number");
    const double d = v.get<double>();
    if (!(d > 0.0) || !std::isfinite(d)) invalid(key, "must be > 0");
    return d;
}

inline std::uint64_t positive_integer(const std::string& key, const json& v) {
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > 0) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() > 0) return std::uint64_t(v.get<std::int64_t>());
    invalid(key, "expected a positive integer");
}

inline json normalize_general(const std::string& key, const json& v) {
    if (key == "learning_rate") return positive_real(key, v);
    if (key == "num_train_epochs" || key == "batch_size") return positive_integer(key, v);
    if (key == "seed") {
        if (!v.is_number_integer()) invalid(key, "expected an integer");
        return v.get<std::int64_t>();
    }
    if (key == "output_dir") {
        if (!v.is_string() || v.get<std::string>().empty()) invalid(key, "expected a non-empty path");
        return v;
    }
    if (key == "eval_fraction") {
        if (!v.is_number()) invalid(key, "expected a number");
        const double d = v.get<double>();
        if (!(d > 0.0 && d < 1.0)) invalid(key, "must lie in (0, 1)");
        return d;
    }
    if (key == "optim") {
        if (!v.is_string() || (v != "adam" && v != "sgd")) invalid(key, "expected \"adam\" or \"sgd\"");
        return v;
    }
    if (key == "max_grad_norm") return positive_real(key, v);
    fail(Errc::UnknownKey, "unknown training key '" + key + "'", key);
}

inline json normalize_task_specific(const std::string& key, const json& v) {
    if (key == "mlm_probability") {
        if (!v.is_number()) invalid(key, "expected a number");
        const double d = v.get<double>();
        if (!(d >= 0.0 && d <= 1.0)) invalid(key, "must lie in [0, 1]");
        return d;
    }
    if (key == "loss_weights") {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            invalid(key, "expected a pair of numbers");
        }
        const double a = v[0].get<double>();
        const double b = v[1].get<double>();
        if (!(a >= 0.0) || !(b >= 0.0)) invalid(key, "weights must be non-negative");
        if (std::abs(a + b - 1.0) > 1e-9) invalid(key, "weights must sum to 1");
        return json::array({a, b});
    }
    return nullptr;
}

}  // namespace config_detail

inline constexpr const char* kGeneralTrainingKeys[] = {"learning_rate", "num_train_epochs", "batch_size",
                                                       "seed", "output_dir", "eval_fraction",
                                                       "optim", "max_grad_norm"};
inline constexpr const char* kTaskSpecificTrainingKeys[] = {"mlm_probability", "loss_weights"};

inline bool is_task_specific_key(std::string_view key) {
    for (const char* k : kTaskSpecificTrainingKeys)
        if (key == k) return true;
    return false;
}

inline bool is_training_key(std::string_view key) {
    if (is_task_specific_key(key)) return true;
    for (const char* k : kGeneralTrainingKeys)
        if (key == k) return true;
    return false;
}

/// Routes each key of a flat dictionary to `general` or `task_specific`.
/// Unknown keys and out-of-range values are rejected with the key named.
inline TrainingConfig split_training_config(const json& raw) {
    if (!raw.is_object()) fail(Errc::InvalidValue, "training config must be a JSON object");
    TrainingConfig cfg;
    for (const auto& [key, value] : raw.items()) {
        if (is_task_specific_key(key)) {
            cfg.task_specific[key] = config_detail::normalize_task_specific(key, value);
        } else {
            cfg.general[key] = config_detail::normalize_general(key, value);
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Model configuration (validated and persisted; never instantiated)
// ---------------------------------------------------------------------------

struct ModelConfig {
    std::int64_t vocab_size = 50265;
    std::int64_t max_position_embeddings = 512;
    std::int64_t num_attention_heads = 12;
    std::int64_t num_hidden_layers = 12;
    std::int64_t hidden_size = 768;
    std::int64_t intermediate_size = 3072;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline const ModelConfig& validate_model_config(const ModelConfig& c) {
    const std::pair<const char*, std::int64_t> fields[] = {
        {"vocab_size", c.vocab_size},
        {"max_position_embeddings", c.max_position_embeddings},
        {"num_attention_heads", c.num_attention_heads},
        {"num_hidden_layers", c.num_hidden_layers},
        {"hidden_size", c.hidden_size},
        {"intermediate_size", c.intermediate_size},
    };
    for (const auto& [name, value] : fields) {
        if (value <= 0) fail(Errc::NonPositiveField, std::string(name) + " must be > 0", name);
    }
    if (c.hidden_size % c.num_attention_heads != 0) {
        fail(Errc::HeadDivisibility,
             "hidden_size " + std::to_string(c.hidden_size) + " is not divisible by num_attention_heads " +
                 std::to_string(c.num_attention_heads),
             "hidden_size");
    }
    return c;
}

inline json to_json(const ModelConfig& c) {
    return {{"vocab_size", c.vocab_size},
            {"max_position_embeddings", c.max_position_embeddings},
            {"num_attention_heads", c.num_attention_heads},
            {"num_hidden_layers", c.num_hidden_layers},
            {"hidden_size", c.hidden_size},
            {"intermediate_size", c.intermediate_size}};
}

inline ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number_integer()) fail(Errc::InvalidValue, key + ": expected an integer", key);
        const auto v = value.get<std::int64_t>();
        if (key == "vocab_size") c.vocab_size = v;
        else if (key == "max_position_embeddings") c.max_position_embeddings = v;
        else if (key == "num_attention_heads") c.num_attention_heads = v;
        else if (key == "num_hidden_layers") c.num_hidden_layers = v;
        else if (key == "hidden_size") c.hidden_size = v;
        else if (key == "intermediate_size") c.intermediate_size = v;
        else fail(Errc::UnknownKey, "unknown model config key '" + key + "'", key);
    }
    return validate_model_config(c);
}

// ---------------------------------------------------------------------------
// Tokenizer configuration
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kSpecialTokenCount = 5;
inline constexpr std::uint32_t kByteAlphabet = 256;

struct TokenizerConfig {
    std::uint32_t max_length = 512;
    std::uint32_t vocab_size = 30000;
    std::uint32_t min_frequency = 2;

    friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

inline const TokenizerConfig& validate_tokenizer_config(const TokenizerConfig& c) {
    if (c.max_length == 0) fail(Errc::ConfigValidation, "max_length must be > 0", "max_length");
    if (c.min_frequency == 0) fail(Errc::ConfigValidation, "min_frequency must be > 0", "min_frequency");
    if (c.vocab_size <= kSpecialTokenCount + kByteAlphabet) {
        fail(Errc::ConfigValidation,
             "vocab_size must exceed " + std::to_string(kSpecialTokenCount + kByteAlphabet) +
                 " (special tokens + byte alphabet)",
             "vocab_size");
    }
    return c;
}

inline json to_json(const TokenizerConfig& c) {
    return {{"max_length", c.max_length}, {"vocab_size", c.vocab_size}, {"min_frequency", c.min_frequency}};
}

inline TokenizerConfig tokenizer_config_from_json(const json& j) {
    TokenizerConfig c;
    for (const auto& [key, value] : j.items()) {
        const auto v = static_cast<std::uint32_t>(config_detail::positive_integer(key, value));
        if (key == "max_length") c.max_length = v;
        else if (key == "vocab_size") c.vocab_size = v;
        else if (key == "min_frequency") c.min_frequency = v;
        else fail(Errc::UnknownKey, "unknown tokenizer config key '" + key + "'", key);
    }
    return validate_tokenizer_config(c);
}

}  // namespace lmforge
