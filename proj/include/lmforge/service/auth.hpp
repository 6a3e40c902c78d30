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

#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmforge/util/strings.hpp"

namespace lmforge {

struct AuthContext {
    std::optional<std::string> authorization;  // raw Authorization header
    const nlohmann::json* body = nullptr;      // parsed request body, if it parsed
    std::string remote_addr;

    /// conversation_id from the body when present and a string.
    std::optional<std::string> conversation_id() const {
        if (body && body->is_object()) {
            const auto it = body->find("conversation_id");
            if (it != body->end() && it->is_string()) return it->get<std::string>();
        }
        return std::nullopt;
    }
};

struct AuthDecision {
    bool allowed = true;
    std::string reason;

    static AuthDecision allow() { return {true, {}}; }
    static AuthDecision deny(std::string reason) { return {false, std::move(reason)}; }
};

using AuthHook = std::function<AuthDecision(const AuthContext&)>;

/// Hooks run in order; the first deny wins. An empty chain allows everything.
class AuthChain {
public:
    AuthChain& add(AuthHook hook) {
        hooks_.push_back(std::move(hook));
        return *this;
    }

    bool empty() const noexcept { return hooks_.empty(); }
    std::size_t size() const noexcept { return hooks_.size(); }

    AuthDecision evaluate(const AuthContext& ctx) const {
        for (const auto& hook : hooks_) {
            auto d = hook(ctx);
            if (!d.allowed) return d;
        }
        return AuthDecision::allow();
    }

private:
    std::vector<AuthHook> hooks_;
};

namespace auth_detail {

inline bool constant_time_equal(std::string_view a, std::string_view b) {
    unsigned char diff = a.size() == b.size() ? 0 : 1;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char x = i < a.size() ? a[i] : 0;
        const unsigned char y = i < b.size() ? b[i] : 0;
        diff |= x ^ y;
    }
    return diff == 0;
}

}  // namespace auth_detail

inline AuthHook no_auth() {
    return [](const AuthContext&) { return AuthDecision::allow(); };
}

/// Accepts `Authorization: Bearer <token>` with exactly this token.
inline AuthHook bearer_token(std::string token) {
    return [token = std::move(token)](const AuthContext& ctx) {
        if (!ctx.authorization || is_blank(*ctx.authorization)) return AuthDecision::deny("missing credentials");
        const std::string_view h = trim(*ctx.authorization);
        constexpr std::string_view kScheme = "Bearer ";
        if (!starts_with(h, kScheme)) return AuthDecision::deny("unsupported authorization scheme");
        if (!auth_detail::constant_time_equal(trim(h.substr(kScheme.size())), token)) {
            return AuthDecision::deny("invalid token");
        }
        return AuthDecision::allow();
    };
}

/// Bearer hook keyed by an environment variable; nullopt when it is unset
/// or empty.
inline std::optional<AuthHook> bearer_token_from_env(const char* var = "LMFORGE_API_TOKEN") {
    const char* v = std::getenv(var);
    if (!v || !*v) return std::nullopt;
    return bearer_token(v);
}

}  // namespace lmforge
