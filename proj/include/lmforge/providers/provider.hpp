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

#include <span>
#include <string>
#include <vector>

#include "lmforge/providers/types.hpp"
#include "lmforge/util/strings.hpp"

namespace lmforge {

/// A chat-completion and embedding backend. Implementations are immutable
/// after construction (apart from counters) and safe to share across threads.
class Provider {
public:
    virtual ~Provider() = default;

    virtual const ProviderEndpoint& endpoint() const = 0;

    /// Streams a completion into `sink`. Failures before the first byte of
    /// the stream throw; failures after it arrive as a terminal error event.
    virtual void stream_chat(std::span<const ChatMessage> messages, const GenerationParams& params,
                             const TokenSink& sink) = 0;

    /// Raw provider output, one vector per text, in order.
    virtual std::vector<std::vector<float>> embed_texts(std::span<const std::string> texts) = 0;
};

inline void validate_messages(std::span<const ChatMessage> messages) {
    if (messages.empty()) fail(Errc::Precondition, "messages must be non-empty");
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (messages[i].role == Role::System && i != 0) {
            fail(Errc::Precondition, "system message must come first", "messages", i);
        }
    }
}

/// Checked streaming completion: validates the message list and guarantees
/// the sink sees exactly one done event, last.
inline void chat_complete(Provider& provider, std::span<const ChatMessage> messages,
                          const GenerationParams& params, const TokenSink& sink) {
    validate_messages(messages);
    bool finished = false;
    bool stopped = false;
    provider.stream_chat(messages, params, [&](const TokenEvent& ev) {
        if (finished || stopped) return false;
        if (ev.done) finished = true;
        if (!sink(ev)) stopped = true;
        return !stopped;
    });
    if (!finished && !stopped) {
        sink(TokenEvent{"", true, FinishReason::Error, "stream ended without a terminal event"});
    }
}

struct Completion {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    std::size_t deltas = 0;
    std::string error;
};

/// Buffered completion: the concatenation of all streamed deltas.
inline Completion complete(Provider& provider, std::span<const ChatMessage> messages,
                           const GenerationParams& params) {
    Completion c;
    chat_complete(provider, messages, params, [&](const TokenEvent& ev) {
        if (!ev.delta.empty()) {
            c.text += ev.delta;
            ++c.deltas;
        }
        if (ev.done) {
            c.finish_reason = ev.finish_reason.value_or(FinishReason::Stop);
            c.error = ev.error;
        }
        return true;
    });
    return c;
}

/// Checked embedding call: non-empty inputs, one vector per input, uniform dim.
inline std::vector<std::vector<float>> embed(Provider& provider, std::span<const std::string> texts) {
    if (texts.empty()) fail(Errc::Precondition, "texts must be non-empty");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (is_blank(texts[i])) fail(Errc::Precondition, "text is empty after trimming", "texts", i);
    }
    auto out = provider.embed_texts(texts);
    if (out.size() != texts.size()) {
        fail(Errc::DimensionMismatch, "provider returned " + std::to_string(out.size()) +
                                          " vectors for " + std::to_string(texts.size()) + " texts");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].empty() || out[i].size() != out.front().size()) {
            fail(Errc::DimensionMismatch, "ragged embedding at index " + std::to_string(i), {}, i);
        }
    }
    return out;
}

}  // namespace lmforge
