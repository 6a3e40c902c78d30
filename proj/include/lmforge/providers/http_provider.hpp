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

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "lmforge/util/http.hpp"
#include <nlohmann/json.hpp>

#include "lmforge/providers/provider.hpp"
#include "lmforge/providers/wire.hpp"
#include "lmforge/util/rng.hpp"

namespace lmforge {

/// Splits "scheme://host[:port][/prefix]" into the client origin and a path
/// prefix without trailing slash.
struct ParsedUrl {
    std::string origin;
    std::string path_prefix;
};

inline ParsedUrl parse_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        fail(Errc::ConfigValidation, "base_url must be absolute: '" + url + "'", "provider_url");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl p;
    p.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) p.path_prefix = url.substr(path_start);
    while (!p.path_prefix.empty() && p.path_prefix.back() == '/') p.path_prefix.pop_back();
    return p;
}

/// Client for openai- and ollama-compatible HTTP endpoints.
///
/// Only connection establishment is retried (exponential backoff with
/// jitter, at most max_retries extra attempts). Once response headers have
/// arrived nothing is retried: non-2xx statuses throw ProviderHttpError and
/// failures inside a 2xx stream surface as a terminal error event.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(ProviderEndpoint endpoint) : endpoint_(std::move(endpoint)) {
        validate_endpoint(endpoint_);
        if (endpoint_.kind == Dialect::Mock) {
            fail(Errc::ConfigValidation, "mock endpoints are served in-process", "provider_kind");
        }
        url_ = parse_base_url(endpoint_.base_url);
    }

    const ProviderEndpoint& endpoint() const override { return endpoint_; }

    /// Connection attempts made over this client's lifetime.
    std::size_t connection_attempts() const noexcept { return attempts_.load(); }

    void stream_chat(std::span<const ChatMessage> messages, const GenerationParams& params,
                     const TokenSink& sink) override {
        const bool openai = endpoint_.kind == Dialect::OpenAI;
        const auto body = openai ? wire::openai_chat_body(endpoint_.model, messages, params)
                                 : wire::ollama_chat_body(endpoint_.model, messages, params);
        const std::string path = url_.path_prefix + (openai ? "/v1/chat/completions" : "/api/chat");

        wire::LineBuffer lines;
        bool terminal_seen = false;
        bool sink_stopped = false;
        std::optional<FinishReason> finish;
        std::string stream_error;

        auto on_line = [&](std::string_view line) {
            if (terminal_seen || sink_stopped || !stream_error.empty()) return;
            std::optional<wire::Chunk> chunk;
            try {
                chunk = openai ? wire::parse_openai_line(line) : wire::parse_ollama_line(line);
            } catch (const Error& e) {
                stream_error = e.what();
                return;
            }
            if (!chunk) return;
            if (chunk->finish_reason) finish = chunk->finish_reason;
            if (!chunk->delta.empty()) {
                if (!sink(TokenEvent{chunk->delta, false, std::nullopt, {}})) sink_stopped = true;
            }
            if (chunk->terminal) terminal_seen = true;
        };

        const auto outcome = post(path, body.dump(), [&](std::string_view data) {
            lines.feed(data, on_line);
            return !sink_stopped && stream_error.empty() && !terminal_seen;
        });
        if (sink_stopped) return;
        if (outcome.transport_error && stream_error.empty() && !terminal_seen) {
            stream_error = outcome.transport_error_text;
        }
        if (stream_error.empty() && !terminal_seen) lines.finish(on_line);
        if (sink_stopped) return;

        if (!stream_error.empty()) {
            sink(TokenEvent{"", true, FinishReason::Error, stream_error});
        } else if (!terminal_seen) {
            sink(TokenEvent{"", true, FinishReason::Error, "stream ended without terminal marker"});
        } else {
            sink(TokenEvent{"", true, finish.value_or(FinishReason::Stop), {}});
        }
    }

    std::vector<std::vector<float>> embed_texts(std::span<const std::string> texts) override {
        if (endpoint_.kind == Dialect::OpenAI) {
            nlohmann::json body = {{"model", endpoint_.model}, {"input", texts}};
            const auto reply = post_buffered(url_.path_prefix + "/v1/embeddings", body.dump());
            try {
                return wire::parse_openai_embeddings(reply);
            } catch (const Error& e) {
                fail(Errc::ProviderHttpError, std::string("unparsable embeddings reply: ") + e.what());
            }
        }
        std::vector<std::vector<float>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            nlohmann::json body = {{"model", endpoint_.model}, {"prompt", t}};
            const auto reply = post_buffered(url_.path_prefix + "/api/embeddings", body.dump());
            try {
                out.push_back(wire::parse_ollama_embedding(reply));
            } catch (const Error& e) {
                fail(Errc::ProviderHttpError, std::string("unparsable embeddings reply: ") + e.what());
            }
        }
        return out;
    }

private:
    struct PostOutcome {
        bool transport_error = false;
        std::string transport_error_text;
    };

    std::unique_ptr<httplib::Client> make_client() const {
        auto client = std::make_unique<httplib::Client>(url_.origin);
        if (!client->is_valid()) {
            fail(Errc::ConfigValidation, "unsupported base_url '" + endpoint_.base_url + "'", "provider_url");
        }
        const auto secs = endpoint_.timeout.count();
        const auto whole = static_cast<time_t>(secs);
        const auto usec = static_cast<time_t>((secs - double(whole)) * 1e6);
        client->set_connection_timeout(whole, usec);
        client->set_read_timeout(whole, usec);
        client->set_write_timeout(whole, usec);
        client->set_keep_alive(false);
        return client;
    }

    void backoff(unsigned attempt) {
        double delay;
        {
            std::lock_guard lock(rng_mu_);
            const double base = endpoint_.backoff_base.count() * std::ldexp(1.0, int(attempt));
            delay = base + base * jitter_.uniform();
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }

    /// POSTs `body`, retrying only failed connection attempts. `on_data`
    /// receives 2xx body bytes as they arrive; non-2xx replies throw.
    template <class OnData>
    PostOutcome post(const std::string& path, const std::string& body, OnData&& on_data) {
        const unsigned max_attempts = endpoint_.max_retries + 1;
        for (unsigned attempt = 0;; ++attempt) {
            auto client = make_client();
            httplib::Request req;
            req.method = "POST";
            req.path = path;
            req.body = body;
            req.set_header("Content-Type", "application/json");
            req.set_header("Accept", "text/event-stream, application/x-ndjson, application/json");
            if (endpoint_.api_key) req.set_header("Authorization", "Bearer " + *endpoint_.api_key);

            int status = 0;
            bool headers_seen = false;
            std::string error_body;
            req.response_handler = [&](const httplib::Response& r) {
                headers_seen = true;
                status = r.status;
                return true;
            };
            req.content_receiver = [&](const char* data, size_t n, uint64_t, uint64_t) {
                if (status < 200 || status >= 300) {
                    if (error_body.size() < 512) error_body.append(data, std::min<size_t>(n, 512));
                    return true;
                }
                return on_data(std::string_view(data, n));
            };

            ++attempts_;
            httplib::Response res;
            httplib::Error err = httplib::Error::Success;
            const bool ok = client->send(req, res, err);

            if (!headers_seen) {
                const bool connect_failure =
                    err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout;
                if (connect_failure) {
                    if (attempt + 1 >= max_attempts) {
                        fail(Errc::ProviderUnreachable,
                             endpoint_.base_url + " unreachable after " + std::to_string(max_attempts) +
                                 " attempts (" + httplib::to_string(err) + ")");
                    }
                    backoff(attempt);
                    continue;
                }
                if (err == httplib::Error::Read) {
                    fail(Errc::Timeout, "no response from " + endpoint_.base_url + " within timeout");
                }
                fail(Errc::ProviderUnreachable, endpoint_.base_url + ": " + httplib::to_string(err));
            }
            if (status < 200 || status >= 300) {
                fail(Errc::ProviderHttpError,
                     "HTTP " + std::to_string(status) + ": " + error_body.substr(0, 200),
                     std::to_string(status));
            }
            PostOutcome outcome;
            if (!ok && err != httplib::Error::Canceled) {
                outcome.transport_error = true;
                outcome.transport_error_text = "stream interrupted: " + httplib::to_string(err);
            }
            return outcome;
        }
    }

    std::string post_buffered(const std::string& path, const std::string& body) {
        std::string reply;
        const auto outcome = post(path, body, [&](std::string_view data) {
            reply.append(data);
            return true;
        });
        if (outcome.transport_error) fail(Errc::ProviderHttpError, outcome.transport_error_text);
        return reply;
    }

    ProviderEndpoint endpoint_;
    ParsedUrl url_;
    std::atomic<std::size_t> attempts_{0};
    std::mutex rng_mu_;
    Rng jitter_{0x6c6d66};
};

}  // namespace lmforge
