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

#include <charconv>
#include <memory>
#include <string>

#include "lmforge/providers/http_provider.hpp"
#include "lmforge/providers/mock_provider.hpp"

namespace lmforge {

/// In-process mock endpoint description: `mock://local?seed=S&dim=D`.
inline ProviderEndpoint mock_endpoint(std::uint64_t seed, std::size_t dim) {
    ProviderEndpoint e;
    e.base_url = "mock://local?seed=" + std::to_string(seed) + "&dim=" + std::to_string(dim);
    e.kind = Dialect::Mock;
    e.model = "mock";
    return e;
}

inline bool is_mock_url(std::string_view url) { return starts_with(url, "mock://"); }

/// Reads an integer query parameter from a mock URL.
inline std::optional<std::uint64_t> mock_url_param(std::string_view url, std::string_view key) {
    const auto q = url.find('?');
    if (q == std::string_view::npos) return std::nullopt;
    for (const auto& kv : split(url.substr(q + 1), '&')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || std::string_view(kv).substr(0, eq) != key) continue;
        std::uint64_t v = 0;
        const auto* first = kv.data() + eq + 1;
        const auto* last = kv.data() + kv.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) {
            fail(Errc::ConfigValidation, "bad mock parameter '" + kv + "'", "provider_url");
        }
        return v;
    }
    return std::nullopt;
}

/// Builds the client for an endpoint. `mock://` URLs (or kind=mock) yield a
/// fresh MockProvider; `default_mock_dim` applies when the URL has no dim.
inline std::shared_ptr<Provider> make_provider(ProviderEndpoint endpoint, std::size_t default_mock_dim = 32) {
    if (endpoint.kind == Dialect::Mock || is_mock_url(endpoint.base_url)) {
        const auto seed = mock_url_param(endpoint.base_url, "seed").value_or(0);
        const auto dim = mock_url_param(endpoint.base_url, "dim").value_or(default_mock_dim);
        if (dim == 0) fail(Errc::ConfigValidation, "mock dim must be positive", "provider_url");
        return std::make_shared<MockProvider>(seed, dim);
    }
    return std::make_shared<HttpProvider>(std::move(endpoint));
}

}  // namespace lmforge
