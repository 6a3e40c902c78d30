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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmforge/memory/store.hpp"
#include "lmforge/providers/provider.hpp"
#include "lmforge/service/auth.hpp"

namespace lmforge {

inline constexpr std::size_t kDefaultMemoryK = 10;

struct ChatRequest {
    std::string prompt;
    std::size_t memory_k = kDefaultMemoryK;
    std::optional<std::string> conversation_id;
    GenerationParams params;
    bool stream = true;
};

namespace chat_detail {

[[noreturn]] inline void reject(const std::string& field, const std::string& reason) {
    fail(Errc::Validation, field + ": " + reason, field);
}

inline double number(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) reject(field, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) reject(field, "must be finite");
    return d;
}

inline std::uint64_t whole(const nlohmann::json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) reject(field, "must be >= 0");
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0 && d == std::floor(d) && d < 9e15) return static_cast<std::uint64_t>(d);
    }
    reject(field, "expected a non-negative integer");
}

}  // namespace chat_detail

/// Strict body parser: unknown fields, wrong types and out-of-range values
/// raise Validation naming the field.
inline ChatRequest parse_chat_request(const nlohmann::json& body) {
    using namespace chat_detail;
    if (!body.is_object()) reject("body", "expected a JSON object");
    ChatRequest r;
    bool have_prompt = false;
    for (const auto& [key, v] : body.items()) {
        if (key == "prompt") {
            if (!v.is_string()) reject(key, "expected a string");
            r.prompt = v.get<std::string>();
            if (is_blank(r.prompt)) reject(key, "must be non-empty");
            have_prompt = true;
        } else if (key == "memory_k") {
            r.memory_k = static_cast<std::size_t>(whole(v, key));
        } else if (key == "conversation_id") {
            if (v.is_null()) continue;
            if (!v.is_string() || v.get<std::string>().empty() || v.get<std::string>().size() > 128) {
                reject(key, "expected a non-empty string of at most 128 bytes");
            }
            r.conversation_id = v.get<std::string>();
        } else if (key == "temperature") {
            r.params.temperature = number(v, key);
            if (r.params.temperature < 0) reject(key, "must be >= 0");
        } else if (key == "top_p") {
            r.params.top_p = number(v, key);
            if (!(r.params.top_p > 0 && r.params.top_p <= 1)) reject(key, "must lie in (0, 1]");
        } else if (key == "max_length") {
            const auto n = whole(v, key);
            if (n == 0 || n > 1'000'000) reject(key, "must be a positive integer");
            r.params.max_length = static_cast<std::uint32_t>(n);
        } else if (key == "system_prompt") {
            if (v.is_null()) continue;
            if (!v.is_string()) reject(key, "expected a string");
            if (!is_blank(v.get<std::string>())) r.params.system_prompt = v.get<std::string>();
        } else if (key == "stream") {
            if (!v.is_boolean()) reject(key, "expected a boolean");
            r.stream = v.get<bool>();
        } else {
            reject(key, "unknown field");
        }
    }
    if (!have_prompt) reject("prompt", "is required");
    return r;
}

/// Rough output size in tokens: one per streamed delta. Providers stream
/// roughly token-sized chunks.
struct GenerateResult {
    std::string conversation_id;
    FinishReason finish_reason = FinishReason::Stop;
    std::string text;
    std::size_t output_token_estimate = 0;
    std::string error;
    bool remembered = false;
};

/// JSON events handed to the transport, in order. Return false to abandon
/// the stream (client went away).
using EventSink = std::function<bool(const nlohmann::json&)>;

/// Transport-independent generation pipeline: window -> provider -> stream
/// -> memory write.
class ChatService {
public:
    ChatService(std::shared_ptr<Provider> provider, std::shared_ptr<ConversationStore> store)
        : provider_(std::move(provider)), store_(std::move(store)) {
        require(provider_ != nullptr && store_ != nullptr, "chat service needs a provider and a store");
    }

    Provider& provider() const noexcept { return *provider_; }
    ConversationStore& store() const noexcept { return *store_; }

    /// The exact message list sent to the provider.
    std::vector<ChatMessage> assemble(const ChatRequest& req, const std::string& conversation_id) const {
        std::vector<ChatMessage> messages;
        if (req.params.system_prompt) messages.push_back({Role::System, *req.params.system_prompt});
        for (auto& m : store_->window(conversation_id, req.memory_k)) {
            messages.push_back({m.role, std::move(m.content)});
        }
        messages.push_back({Role::User, req.prompt});
        return messages;
    }

    /// Provider failures before the first streamed event propagate as
    /// exceptions; later ones become an error terminal event.
    GenerateResult generate(const ChatRequest& req, const EventSink& sink) {
        GenerateResult result;
        result.conversation_id = req.conversation_id ? *req.conversation_id : store_->new_conversation_id();
        const auto messages = assemble(req, result.conversation_id);
        bool abandoned = false;
        chat_complete(*provider_, messages, req.params, [&](const TokenEvent& ev) {
            if (!ev.delta.empty()) {
                result.text += ev.delta;
                ++result.output_token_estimate;
                if (!sink({{"delta", ev.delta}, {"done", false}})) {
                    abandoned = true;
                    return false;
                }
            }
            if (ev.done) {
                result.finish_reason = ev.finish_reason.value_or(FinishReason::Stop);
                result.error = ev.error;
            }
            return true;
        });
        if (abandoned) {
            result.finish_reason = FinishReason::Error;
            result.error = "client disconnected";
            return result;
        }
        nlohmann::json terminal = {{"done", true},
                                   {"conversation_id", result.conversation_id},
                                   {"finish_reason", finish_reason_name(result.finish_reason)},
                                   {"output_token_estimate", result.output_token_estimate}};
        if (result.finish_reason == FinishReason::Error) {
            terminal["error"] = result.error;
        } else if (!is_blank(result.text)) {
            store_->append_turn(result.conversation_id, req.prompt, result.text);
            result.remembered = true;
        }
        sink(terminal);
        return result;
    }

private:
    std::shared_ptr<Provider> provider_;
    std::shared_ptr<ConversationStore> store_;
};

}  // namespace lmforge
