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
#include <condition_variable>
#include <deque>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "lmforge/util/http.hpp"
#include <nlohmann/json.hpp>

#include "lmforge/service/chat_service.hpp"
#include "lmforge/service/ui_assets.hpp"

#ifndef LMFORGE_VERSION
#define LMFORGE_VERSION "0.0.0"
#endif

namespace lmforge {

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8000;  // 0 picks a free port
    // Production mode refuses to start without an authenticator.
    bool production = false;
    std::optional<std::filesystem::path> ui_dir;
    std::size_t worker_threads = 16;
};

namespace server_detail {

/// Frames produced by the generation thread, drained by the HTTP writer.
struct Channel {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> frames;
    std::size_t produced = 0;
    bool closed = false;
    bool cancelled = false;
    std::exception_ptr error;
};

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline int status_for(const Error& e) {
    switch (e.code()) {
        case Errc::ProviderUnreachable:
        case Errc::ProviderHttpError:
        case Errc::MalformedStreamChunk:
        case Errc::Timeout: return 502;
        case Errc::Validation:
        case Errc::Precondition: return 422;
        default: return 500;
    }
}

}  // namespace server_detail

/// HTTP front end: GET / (chat page), POST /api/generate (SSE or buffered
/// JSON) and GET /healthz.
class ChatServer {
public:
    ChatServer(std::shared_ptr<ChatService> service, AuthChain auth, ServerConfig config = {})
        : service_(std::move(service)), auth_(std::move(auth)), config_(std::move(config)) {
        require(service_ != nullptr, "chat server needs a service");
        if (config_.production && auth_.empty()) {
            fail(Errc::ConfigValidation, "production mode requires an authenticator (set LMFORGE_API_TOKEN)", "auth");
        }
        if (config_.ui_dir && !std::filesystem::is_directory(*config_.ui_dir)) {
            fail(Errc::ConfigValidation, "ui directory does not exist: " + config_.ui_dir->string(), "ui_dir");
        }
        routes();
    }

    ~ChatServer() { stop(); }

    ChatServer(const ChatServer&) = delete;
    ChatServer& operator=(const ChatServer&) = delete;

    /// Binds and starts serving on a background thread; returns the port.
    int start() {
        int port = config_.port;
        if (port == 0) {
            port = server_.bind_to_any_port(config_.host);
            if (port < 0) fail(Errc::BindFailure, "cannot bind " + config_.host + " to any port");
        } else if (!server_.bind_to_port(config_.host, port)) {
            fail(Errc::BindFailure, "cannot bind " + config_.host + ":" + std::to_string(port));
        }
        port_ = port;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port;
    }

    /// Blocks until stop() is called from elsewhere.
    void wait() {
        if (thread_.joinable()) thread_.join();
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
        std::unique_lock lock(producers_mu_);
        producers_cv_.wait(lock, [&] { return producers_ == 0; });
    }

    int port() const noexcept { return port_; }

private:
    void routes() {
        server_.new_task_queue = [n = config_.worker_threads] { return new httplib::ThreadPool(n); };
        // SO_REUSEADDR only. The library default, SO_REUSEPORT, lets a second
        // server share an occupied port silently.
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });

        if (config_.ui_dir) {
            server_.set_mount_point("/", config_.ui_dir->string());
        } else {
            auto page = [](const httplib::Request&, httplib::Response& res) {
                res.set_content(std::string(kBootstrapHtml), "text/html; charset=utf-8");
            };
            server_.Get("/", page);
            server_.Get("/index.html", page);
        }

        server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            const auto& ep = service_->provider().endpoint();
            server_detail::send_json(res, 200,
                                     {{"status", "ok"},
                                      {"version", LMFORGE_VERSION},
                                      {"provider", dialect_name(ep.kind)},
                                      {"model", ep.model},
                                      {"auth", !auth_.empty()}});
        });

        server_.Post("/api/generate",
                     [this](const httplib::Request& req, httplib::Response& res) { generate(req, res); });
        auto not_allowed = [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Allow", "POST");
            server_detail::send_json(res, 405, {{"error", "method not allowed; use POST"}});
        };
        server_.Get("/api/generate", not_allowed);
        server_.Put("/api/generate", not_allowed);
        server_.Delete("/api/generate", not_allowed);
        server_.Patch("/api/generate", not_allowed);
    }

    void generate(const httplib::Request& req, httplib::Response& res) {
        using server_detail::send_json;
        const auto body = nlohmann::json::parse(req.body, nullptr, false);

        AuthContext ctx;
        if (req.has_header("Authorization")) ctx.authorization = req.get_header_value("Authorization");
        ctx.body = body.is_discarded() ? nullptr : &body;
        ctx.remote_addr = req.remote_addr;
        if (const auto d = auth_.evaluate(ctx); !d.allowed) {
            res.set_header("WWW-Authenticate", "Bearer");
            send_json(res, 401, {{"error", d.reason}});
            return;
        }

        if (body.is_discarded()) {
            send_json(res, 422, {{"error", "body: invalid JSON"}, {"field", "body"}});
            return;
        }
        ChatRequest request;
        try {
            request = parse_chat_request(body);
        } catch (const Error& e) {
            send_json(res, 422, {{"error", e.what()}, {"field", e.field()}});
            return;
        }

        if (!request.stream) {
            buffered(request, res);
            return;
        }
        streamed(std::move(request), res);
    }

    void buffered(const ChatRequest& request, httplib::Response& res) {
        using server_detail::send_json;
        try {
            const auto r = service_->generate(request, [](const nlohmann::json&) { return true; });
            nlohmann::json out = {{"output", r.text},
                                  {"conversation_id", r.conversation_id},
                                  {"finish_reason", finish_reason_name(r.finish_reason)},
                                  {"output_token_estimate", r.output_token_estimate}};
            if (r.finish_reason == FinishReason::Error) {
                out["error"] = r.error;
                send_json(res, 502, out);
            } else {
                send_json(res, 200, out);
            }
        } catch (const Error& e) {
            send_json(res, server_detail::status_for(e), {{"error", e.what()}});
        }
    }

    void streamed(ChatRequest request, httplib::Response& res) {
        using server_detail::Channel;
        auto ch = std::make_shared<Channel>();
        {
            std::lock_guard lock(producers_mu_);
            ++producers_;
        }
        std::thread([this, ch, request = std::move(request)] {
            try {
                service_->generate(request, [&](const nlohmann::json& ev) {
                    std::lock_guard lock(ch->mu);
                    if (ch->cancelled) return false;
                    ch->frames.push_back("data: " + ev.dump() + "\n\n");
                    ++ch->produced;
                    ch->cv.notify_all();
                    return true;
                });
            } catch (...) {
                std::lock_guard lock(ch->mu);
                ch->error = std::current_exception();
            }
            {
                std::lock_guard lock(ch->mu);
                ch->closed = true;
                ch->cv.notify_all();
            }
            std::lock_guard lock(producers_mu_);
            --producers_;
            producers_cv_.notify_all();
        }).detach();

        // Hold the status line until the provider has produced something, so
        // failures before the stream starts become a plain error response.
        std::unique_lock lock(ch->mu);
        ch->cv.wait(lock, [&] { return ch->produced > 0 || ch->closed; });
        if (ch->produced == 0 && ch->error) {
            const auto err = ch->error;
            lock.unlock();
            try {
                std::rethrow_exception(err);
            } catch (const Error& e) {
                server_detail::send_json(res, server_detail::status_for(e), {{"error", e.what()}});
            } catch (const std::exception& e) {
                server_detail::send_json(res, 500, {{"error", e.what()}});
            }
            return;
        }
        lock.unlock();

        res.set_header("Cache-Control", "no-cache");
        res.set_header("X-Accel-Buffering", "no");
        res.set_chunked_content_provider(
            "text/event-stream",
            [ch](std::size_t, httplib::DataSink& sink) {
                std::unique_lock lock(ch->mu);
                ch->cv.wait(lock, [&] { return !ch->frames.empty() || ch->closed; });
                while (!ch->frames.empty()) {
                    std::string frame = std::move(ch->frames.front());
                    ch->frames.pop_front();
                    lock.unlock();
                    const bool ok = sink.write(frame.data(), frame.size());
                    lock.lock();
                    if (!ok) {
                        ch->cancelled = true;
                        return false;
                    }
                }
                if (ch->closed) {
                    if (ch->error) {
                        // Failure after frames went out: close with an error event.
                        std::string msg = "internal error";
                        try {
                            std::rethrow_exception(ch->error);
                        } catch (const std::exception& e) {
                            msg = e.what();
                        }
                        const auto frame =
                            "data: " + nlohmann::json{{"done", true}, {"finish_reason", "error"}, {"error", msg}}.dump() +
                            "\n\n";
                        sink.write(frame.data(), frame.size());
                    }
                    sink.done();
                }
                return true;
            },
            [ch](bool) {
                std::lock_guard lock(ch->mu);
                ch->cancelled = true;
            });
    }

    std::shared_ptr<ChatService> service_;
    AuthChain auth_;
    ServerConfig config_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;

    std::mutex producers_mu_;
    std::condition_variable producers_cv_;
    std::size_t producers_ = 0;
};

}  // namespace lmforge
