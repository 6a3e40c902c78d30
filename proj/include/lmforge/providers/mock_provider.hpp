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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lmforge/providers/provider.hpp"
#include "lmforge/util/rng.hpp"
#include "lmforge/util/strings.hpp"

namespace lmforge {

namespace mock_detail {

inline std::vector<double> unit_gaussian(std::uint64_t seed, std::string_view tag, std::string_view text,
                                         std::size_t dim) {
    std::uint64_t state = fnv1a64(text, fnv1a64(tag, seed ^ 0x51ed270b27a3cbf1ULL));
    std::vector<double> v(dim);
    double norm = 0.0;
    while (norm == 0.0) {
        for (std::size_t i = 0; i < dim; i += 2) {
            // Box-Muller over splitmix draws keeps this platform-independent.
            const double u1 = 1.0 - static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
            const double u2 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
            const double r = std::sqrt(-2.0 * std::log(u1));
            v[i] = r * std::cos(2.0 * std::numbers::pi * u2);
            if (i + 1 < dim) v[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
        }
        norm = 0.0;
        for (double x : v) norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace mock_detail

/// The mock embedding map: 0.9 x keyword vector + 0.1 x whole-text vector,
/// L2-normalized. The keyword is the first whitespace token. Both parts are
/// unit vectors, so texts sharing a keyword sit within ~12.8 degrees of each
/// other (cosine >= 0.975).
inline std::vector<float> mock_embedding(std::uint64_t seed, std::size_t dim, std::string_view text) {
    const auto words = split_whitespace(text);
    const std::string_view keyword = words.empty() ? std::string_view{} : words.front();
    const auto kv = mock_detail::unit_gaussian(seed, "kw", keyword, dim);
    const auto rv = mock_detail::unit_gaussian(seed, "txt", text, dim);
    std::vector<double> v(dim);
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        v[i] = 0.9 * kv[i] + 0.1 * rv[i];
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
    return out;
}

/// Splits a reply into stream deltas: each delta is a word together with
/// the whitespace preceding it ("hello world" -> "hello", " world").
inline std::vector<std::string> mock_deltas(std::string_view reply) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= reply.size(); ++i) {
        if (i == reply.size() || (is_ascii_space(reply[i]) && !is_ascii_space(reply[i - 1]))) {
            out.emplace_back(reply.substr(start, i - start));
            start = i;
        }
    }
    if (out.size() == 1 && out.front().empty()) out.clear();
    return out;
}

/// Deterministic in-process provider.
///
/// Chat rules, in order: a scripted reply whose needle occurs in any user
/// message (replies are consumed in order, the last one repeats); a final
/// user message starting with "echo: " is answered with the remainder; else
/// the default reply. max_length caps the number of deltas.
class MockProvider final : public Provider {
public:
    struct RecordedRequest {
        std::vector<ChatMessage> messages;
        GenerationParams params;
    };

    explicit MockProvider(std::uint64_t seed = 0, std::size_t dim = 32) : seed_(seed), dim_(dim) {
        require(dim > 0, "mock dim must be positive");
        endpoint_.base_url = "mock://local?seed=" + std::to_string(seed) + "&dim=" + std::to_string(dim);
        endpoint_.kind = Dialect::Mock;
        endpoint_.model = "mock";
    }

    const ProviderEndpoint& endpoint() const override { return endpoint_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t dim() const noexcept { return dim_; }

    // --- scripting -------------------------------------------------------

    void script(std::string needle, std::vector<std::string> replies) {
        require(!replies.empty(), "script needs at least one reply");
        std::lock_guard lock(mu_);
        scripts_.push_back({std::move(needle), std::deque<std::string>(replies.begin(), replies.end())});
    }

    void set_default_reply(std::string reply) {
        std::lock_guard lock(mu_);
        default_reply_ = std::move(reply);
    }

    /// Emit this many deltas, then a terminal error event.
    void fail_mid_stream_after(std::optional<std::size_t> deltas) {
        std::lock_guard lock(mu_);
        fail_after_ = deltas;
    }

    /// Every connection attempt fails; `max_retries + 1` attempts are counted.
    void set_unreachable(bool unreachable) { unreachable_ = unreachable; }

    void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

    void set_max_retries(unsigned n) { endpoint_.max_retries = n; }

    /// Next embed call returns vectors of alternating dimensionality.
    void set_ragged_embeddings(bool ragged) { ragged_ = ragged; }

    // --- observation -----------------------------------------------------

    std::vector<RecordedRequest> recorded_requests() const {
        std::lock_guard lock(mu_);
        return recorded_;
    }
    std::size_t chat_calls() const noexcept { return chat_calls_.load(); }
    std::size_t embed_calls() const noexcept { return embed_calls_.load(); }
    std::size_t connection_attempts() const noexcept { return attempts_.load(); }
    std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }

    /// The reply the mock would produce for `messages`, without consuming
    /// scripted replies.
    std::string peek_reply(std::span<const ChatMessage> messages) const {
        std::lock_guard lock(mu_);
        return reply_for(messages, /*consume=*/false);
    }

    // --- Provider --------------------------------------------------------

    void stream_chat(std::span<const ChatMessage> messages, const GenerationParams& params,
                     const TokenSink& sink) override {
        connect();
        InFlight guard(*this);
        ++chat_calls_;
        std::string reply;
        std::optional<std::size_t> fail_after;
        {
            std::lock_guard lock(mu_);
            recorded_.push_back({{messages.begin(), messages.end()}, params});
            reply = reply_for(messages, /*consume=*/true);
            fail_after = fail_after_;
        }
        if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

        const auto deltas = mock_deltas(reply);
        const std::size_t cap = params.max_length;
        std::size_t emitted = 0;
        for (const auto& d : deltas) {
            if (fail_after && emitted == *fail_after) {
                sink(TokenEvent{"", true, FinishReason::Error, "mock: injected mid-stream failure"});
                return;
            }
            if (emitted == cap) {
                sink(TokenEvent{"", true, FinishReason::Length, {}});
                return;
            }
            if (!sink(TokenEvent{d, false, std::nullopt, {}})) return;
            ++emitted;
        }
        if (fail_after && emitted == *fail_after) {
            sink(TokenEvent{"", true, FinishReason::Error, "mock: injected mid-stream failure"});
            return;
        }
        sink(TokenEvent{"", true, FinishReason::Stop, {}});
    }

    std::vector<std::vector<float>> embed_texts(std::span<const std::string> texts) override {
        connect();
        InFlight guard(*this);
        ++embed_calls_;
        if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
        std::vector<std::vector<float>> out;
        out.reserve(texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const std::size_t d = (ragged_ && i % 2 == 1) ? dim_ + 1 : dim_;
            out.push_back(mock_embedding(seed_, d, texts[i]));
        }
        return out;
    }

private:
    struct Script {
        std::string needle;
        std::deque<std::string> replies;
    };

    struct InFlight {
        explicit InFlight(MockProvider& p) : p_(p) {
            const auto now = ++p_.in_flight_;
            auto prev = p_.max_in_flight_.load();
            while (now > prev && !p_.max_in_flight_.compare_exchange_weak(prev, now)) {
            }
        }
        ~InFlight() { --p_.in_flight_; }
        MockProvider& p_;
    };

    void connect() {
        if (!unreachable_) {
            ++attempts_;
            return;
        }
        attempts_ += endpoint_.max_retries + 1;
        fail(Errc::ProviderUnreachable, "mock endpoint unreachable after " +
                                            std::to_string(endpoint_.max_retries + 1) + " attempts");
    }

    std::string reply_for(std::span<const ChatMessage> messages, bool consume) const {
        for (auto& s : scripts_) {
            const bool hit = std::any_of(messages.begin(), messages.end(), [&](const ChatMessage& m) {
                return m.role == Role::User && m.content.find(s.needle) != std::string::npos;
            });
            if (!hit) continue;
            std::string r = s.replies.front();
            if (consume && s.replies.size() > 1) s.replies.pop_front();
            return r;
        }
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            if (it->role != Role::User) continue;
            constexpr std::string_view kEcho = "echo: ";
            if (starts_with(it->content, kEcho)) return it->content.substr(kEcho.size());
            break;
        }
        return default_reply_;
    }

    std::uint64_t seed_;
    std::size_t dim_;
    ProviderEndpoint endpoint_;

    mutable std::mutex mu_;
    mutable std::vector<Script> scripts_;
    std::string default_reply_ = "ok";
    std::optional<std::size_t> fail_after_;
    std::vector<RecordedRequest> recorded_;

    std::atomic<bool> unreachable_{false};
    std::atomic<bool> ragged_{false};
    std::chrono::milliseconds latency_{0};
    std::atomic<std::size_t> chat_calls_{0};
    std::atomic<std::size_t> embed_calls_{0};
    std::atomic<std::size_t> attempts_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> max_in_flight_{0};
};

}  // namespace lmforge
