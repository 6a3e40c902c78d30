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

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmforge/util/error.hpp"

namespace lmforge {

enum class Role { System, User, Assistant };

constexpr std::string_view role_name(Role r) noexcept {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

inline Role parse_role(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    fail(Errc::InvalidValue, "unknown role '" + std::string(s) + "'", "role");
}

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Sampling controls forwarded verbatim to the provider.
struct GenerationParams {
    double temperature = 0.7;
    double top_p = 0.9;
    std::uint32_t max_length = 512;
    std::optional<std::string> system_prompt;

    friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

enum class FinishReason { Stop, Length, Error };

constexpr std::string_view finish_reason_name(FinishReason r) noexcept {
    switch (r) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Error: return "error";
    }
    return "error";
}

/// One streamed increment. The final event of every stream has done=true and
/// carries the finish reason; `error` is set only when finish_reason is Error.
struct TokenEvent {
    std::string delta;
    bool done = false;
    std::optional<FinishReason> finish_reason;
    std::string error;
};

/// Return false to stop the stream early.
using TokenSink = std::function<bool(const TokenEvent&)>;

enum class Dialect { OpenAI, Ollama, Mock };

constexpr std::string_view dialect_name(Dialect d) noexcept {
    switch (d) {
        case Dialect::OpenAI: return "openai";
        case Dialect::Ollama: return "ollama";
        case Dialect::Mock: return "mock";
    }
    return "openai";
}

inline Dialect parse_dialect(std::string_view s) {
    if (s == "openai" || s == "openai-compatible") return Dialect::OpenAI;
    if (s == "ollama" || s == "ollama-compatible") return Dialect::Ollama;
    if (s == "mock") return Dialect::Mock;
    fail(Errc::InvalidValue, "unknown provider dialect '" + std::string(s) + "'", "provider_kind");
}

struct ProviderEndpoint {
    std::string base_url;
    Dialect kind = Dialect::OpenAI;
    std::string model;
    std::optional<std::string> api_key;
    std::chrono::duration<double> timeout{60.0};
    unsigned max_retries = 2;
    // First retry waits roughly this long; later retries double it.
    std::chrono::duration<double> backoff_base{0.2};
};

inline void validate_endpoint(const ProviderEndpoint& e) {
    const auto scheme_end = e.base_url.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0 || scheme_end + 3 >= e.base_url.size()) {
        fail(Errc::ConfigValidation, "base_url must be an absolute URL: '" + e.base_url + "'",
             "provider_url");
    }
    if (!(e.timeout.count() > 0)) fail(Errc::ConfigValidation, "timeout must be > 0", "timeout");
    if (e.max_retries > 5) fail(Errc::ConfigValidation, "max_retries must be <= 5", "max_retries");
}

}  // namespace lmforge
