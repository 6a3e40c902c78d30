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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmforge/providers/types.hpp"

namespace lmforge::wire {

using nlohmann::json;

/// Reassembles lines from arbitrarily split network chunks. Accepts LF and
/// CRLF terminators; the terminator is not part of the line.
class LineBuffer {
public:
    template <class F>
    void feed(std::string_view chunk, F&& on_line) {
        pending_.append(chunk);
        std::size_t start = 0;
        for (;;) {
            const auto nl = pending_.find('\n', start);
            if (nl == std::string::npos) break;
            std::size_t end = nl;
            if (end > start && pending_[end - 1] == '\r') --end;
            on_line(std::string_view(pending_).substr(start, end - start));
            start = nl + 1;
        }
        pending_.erase(0, start);
    }

    /// Flushes a final unterminated line, if any.
    template <class F>
    void finish(F&& on_line) {
        if (!pending_.empty()) {
            std::string last = std::move(pending_);
            pending_.clear();
            if (!last.empty() && last.back() == '\r') last.pop_back();
            on_line(std::string_view(last));
        }
    }

private:
    std::string pending_;
};

/// A parsed stream increment. `terminal` marks the end-of-stream record.
struct Chunk {
    std::string delta;
    bool terminal = false;
    std::optional<FinishReason> finish_reason;
};

inline std::optional<FinishReason> parse_finish_reason(const json& v) {
    if (!v.is_string()) return std::nullopt;
    const auto s = v.get<std::string>();
    if (s == "stop" || s == "eos" || s == "end_turn") return FinishReason::Stop;
    if (s == "length" || s == "max_tokens") return FinishReason::Length;
    return FinishReason::Stop;
}

inline json parse_json_chunk(std::string_view text) {
    auto j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        fail(Errc::MalformedStreamChunk, "not a JSON object: " + std::string(text.substr(0, 120)));
    }
    return j;
}

/// openai dialect, SSE framing. Returns nullopt for lines that carry no
/// payload (blank separators, comments, other SSE fields).
inline std::optional<Chunk> parse_openai_line(std::string_view line) {
    constexpr std::string_view kData = "data: ";
    if (line.substr(0, kData.size()) != kData) return std::nullopt;
    const auto payload = line.substr(kData.size());
    if (payload == "[DONE]") return Chunk{"", true, std::nullopt};
    const auto j = parse_json_chunk(payload);
    Chunk c;
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array()) {
        if (j.contains("error")) {
            fail(Errc::MalformedStreamChunk, "provider error in stream: " + j["error"].dump());
        }
        fail(Errc::MalformedStreamChunk, "chunk without choices array");
    }
    if (choices->empty()) return c;
    const auto& choice = (*choices)[0];
    if (!choice.is_object()) fail(Errc::MalformedStreamChunk, "choice is not an object");
    if (auto d = choice.find("delta"); d != choice.end() && d->is_object()) {
        if (auto content = d->find("content"); content != d->end() && content->is_string()) {
            c.delta = content->get<std::string>();
        }
    }
    if (auto fr = choice.find("finish_reason"); fr != choice.end()) {
        c.finish_reason = parse_finish_reason(*fr);
    }
    return c;
}

/// ollama dialect: one JSON object per line, `"done": true` terminates.
inline std::optional<Chunk> parse_ollama_line(std::string_view line) {
    if (line.find_first_not_of(" \t") == std::string_view::npos) return std::nullopt;
    const auto j = parse_json_chunk(line);
    if (j.contains("error")) {
        fail(Errc::MalformedStreamChunk, "provider error in stream: " + j["error"].dump());
    }
    Chunk c;
    if (auto m = j.find("message"); m != j.end() && m->is_object()) {
        if (auto content = m->find("content"); content != m->end() && content->is_string()) {
            c.delta = content->get<std::string>();
        }
    }
    const auto done = j.find("done");
    if (done == j.end() || !done->is_boolean()) {
        fail(Errc::MalformedStreamChunk, "chunk without boolean 'done'");
    }
    c.terminal = done->get<bool>();
    if (c.terminal) {
        c.finish_reason = FinishReason::Stop;
        if (auto r = j.find("done_reason"); r != j.end()) {
            c.finish_reason = parse_finish_reason(*r).value_or(FinishReason::Stop);
        }
    }
    return c;
}

inline json messages_json(std::span<const ChatMessage> messages) {
    json arr = json::array();
    for (const auto& m : messages) {
        arr.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
    }
    return arr;
}

inline json openai_chat_body(const std::string& model, std::span<const ChatMessage> messages,
                             const GenerationParams& p) {
    return {{"model", model},
            {"messages", messages_json(messages)},
            {"stream", true},
            {"temperature", p.temperature},
            {"top_p", p.top_p},
            {"max_tokens", p.max_length}};
}

inline json ollama_chat_body(const std::string& model, std::span<const ChatMessage> messages,
                             const GenerationParams& p) {
    return {{"model", model},
            {"messages", messages_json(messages)},
            {"stream", true},
            {"options", {{"temperature", p.temperature}, {"top_p", p.top_p}, {"num_predict", p.max_length}}}};
}

inline std::vector<float> parse_float_array(const json& arr) {
    if (!arr.is_array()) fail(Errc::MalformedStreamChunk, "embedding is not an array");
    std::vector<float> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) fail(Errc::MalformedStreamChunk, "embedding component is not a number");
        out.push_back(v.get<float>());
    }
    return out;
}

/// `{"data": [{"embedding": [...], "index": i}, ...]}`, reordered by index.
inline std::vector<std::vector<float>> parse_openai_embeddings(std::string_view body) {
    const auto j = parse_json_chunk(body);
    const auto data = j.find("data");
    if (data == j.end() || !data->is_array()) fail(Errc::MalformedStreamChunk, "missing data array");
    std::vector<std::vector<float>> out(data->size());
    std::vector<bool> seen(data->size(), false);
    for (std::size_t i = 0; i < data->size(); ++i) {
        const auto& item = (*data)[i];
        std::size_t idx = i;
        if (auto ix = item.find("index"); ix != item.end() && ix->is_number_unsigned()) {
            idx = ix->get<std::size_t>();
        }
        if (idx >= out.size() || seen[idx]) fail(Errc::MalformedStreamChunk, "bad embedding index");
        seen[idx] = true;
        out[idx] = parse_float_array(item.value("embedding", json()));
    }
    return out;
}

inline std::vector<float> parse_ollama_embedding(std::string_view body) {
    const auto j = parse_json_chunk(body);
    return parse_float_array(j.value("embedding", json()));
}

}  // namespace lmforge::wire
