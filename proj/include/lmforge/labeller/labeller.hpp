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
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmforge/providers/provider.hpp"
#include "lmforge/util/csv.hpp"

namespace lmforge {

/// Labels with their conditions, in declaration order.
struct LabelSchema {
    std::vector<std::pair<std::string, std::string>> labels;
    bool multi_label = false;

    bool has(std::string_view name) const {
        return std::any_of(labels.begin(), labels.end(), [&](const auto& l) { return l.first == name; });
    }
};

inline const LabelSchema& validate_label_schema(const LabelSchema& s) {
    const std::size_t min = s.multi_label ? 1 : 2;
    if (s.labels.size() < min) {
        fail(Errc::ConfigValidation,
             std::string(s.multi_label ? "multi-label" : "single-label") + " schema needs at least " +
                 std::to_string(min) + " labels",
             "labels");
    }
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        const auto& [name, condition] = s.labels[i];
        if (is_blank(name)) fail(Errc::ConfigValidation, "label names must be non-empty", "labels", i);
        if (trim(name) != name) fail(Errc::ConfigValidation, "label '" + name + "' has surrounding whitespace", "labels", i);
        if (is_blank(condition)) fail(Errc::ConfigValidation, "label '" + name + "' has an empty condition", "labels", i);
        for (std::size_t j = 0; j < i; ++j) {
            if (s.labels[j].first == name) fail(Errc::ConfigValidation, "duplicate label '" + name + "'", "labels", i);
        }
    }
    return s;
}

/// {"labels": {name: condition, ...}, "multi_label": bool}; key order is
/// declaration order.
inline LabelSchema label_schema_from_json(std::string_view text) {
    const auto j = nlohmann::ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(Errc::ConfigValidation, "schema must be a JSON object");
    LabelSchema s;
    for (const auto& [key, value] : j.items()) {
        if (key == "labels") {
            if (!value.is_object()) fail(Errc::ConfigValidation, "labels must be an object", "labels");
            for (const auto& [name, cond] : value.items()) {
                if (!cond.is_string()) fail(Errc::ConfigValidation, "condition for '" + name + "' must be a string", "labels");
                s.labels.emplace_back(name, cond.get<std::string>());
            }
        } else if (key == "multi_label") {
            if (!value.is_boolean()) fail(Errc::ConfigValidation, "multi_label must be a boolean", "multi_label");
            s.multi_label = value.get<bool>();
        } else {
            fail(Errc::UnknownKey, "unknown schema key '" + key + "'", key);
        }
    }
    return validate_label_schema(s);
}

struct LabelResult {
    std::string text;
    std::vector<std::string> labels;  // schema order
    std::string raw_response;
    unsigned retries = 0;
};

/// The labelling prompt: system instruction plus the raw text.
inline std::vector<ChatMessage> label_prompt(const LabelSchema& schema, const std::string& text) {
    std::string sys = "You are a text annotation assistant. Label the user's text using these labels, given as "
                      "label: condition.\n\n";
    for (const auto& [name, cond] : schema.labels) sys += name + ": " + cond + "\n";
    sys += "\n";
    sys += schema.multi_label ? "Assign every label whose condition applies (at least one).\n"
                              : "Assign exactly one label.\n";
    sys += "Respond with only a JSON array of label names, for example [" +
           nlohmann::json(schema.labels.front().first).dump() + "], and nothing else.";
    return {{Role::System, std::move(sys)}, {Role::User, text}};
}

inline constexpr std::string_view kLabelCorrection =
    "Your previous reply could not be used. Reply with only a JSON array of label names from the list, "
    "with no other text.";

namespace label_detail {

struct Parsed {
    std::vector<std::string> labels;
    std::string problem;  // non-empty when the reply is unusable
};

inline std::string_view strip_fence(std::string_view s) {
    s = trim(s);
    if (starts_with(s, "```")) {
        const auto nl = s.find('\n');
        const auto close = s.rfind("```");
        if (nl != std::string_view::npos && close > nl) s = trim(s.substr(nl + 1, close - nl - 1));
    }
    return s;
}

inline Parsed parse_reply(const LabelSchema& schema, std::string_view reply) {
    const auto j = nlohmann::json::parse(strip_fence(reply), nullptr, false);
    if (j.is_discarded() || !j.is_array()) return {{}, "reply is not a JSON array"};
    std::vector<std::string> names;
    for (const auto& v : j) {
        if (!v.is_string()) return {{}, "array holds a non-string"};
        auto n = v.get<std::string>();
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(std::move(n));
    }
    if (names.empty()) return {{}, "no label assigned"};
    if (!schema.multi_label && names.size() != 1) return {{}, "expected exactly one label"};
    for (const auto& n : names) {
        if (!schema.has(n)) {
            fail(Errc::UnknownLabelInResponse, "provider returned unknown label '" + n + "'", n);
        }
    }
    Parsed p;
    for (const auto& [name, cond] : schema.labels)
        if (std::find(names.begin(), names.end(), name) != names.end()) p.labels.push_back(name);
    return p;
}

}  // namespace label_detail

struct LabelBatchEntry {
    std::optional<LabelResult> result;
    std::optional<Errc> error_code;
    std::string error;
};

class Labeller {
public:
    Labeller(std::shared_ptr<Provider> provider, LabelSchema schema)
        : provider_(std::move(provider)), schema_(validate_label_schema(schema)) {
        require(provider_ != nullptr, "labeller needs a provider");
        params_.temperature = 0.0;
        params_.top_p = 1.0;
        params_.max_length = 256;
    }

    const LabelSchema& schema() const noexcept { return schema_; }
    Provider& provider() const noexcept { return *provider_; }

    /// One labelled text. A malformed reply (not a JSON array, or the wrong
    /// number of labels) earns one corrective retry.
    LabelResult label(const std::string& text) const {
        if (is_blank(text)) fail(Errc::Precondition, "text must be non-empty", "text");
        auto messages = label_prompt(schema_, text);
        LabelResult r{text, {}, {}, 0};
        for (;;) {
            r.raw_response = ask(messages);
            auto parsed = label_detail::parse_reply(schema_, r.raw_response);
            if (parsed.problem.empty()) {
                r.labels = std::move(parsed.labels);
                return r;
            }
            if (r.retries == 1) {
                fail(Errc::UnparsableResponse,
                     "unusable label reply after retry (" + parsed.problem + "): " + r.raw_response.substr(0, 200));
            }
            ++r.retries;
            messages.push_back({Role::Assistant, r.raw_response});
            messages.push_back({Role::User, std::string(kLabelCorrection)});
        }
    }

    /// Index-aligned results; failures become error entries. At most
    /// `concurrency` provider calls run at once.
    std::vector<LabelBatchEntry> label_batch(const std::vector<std::string>& texts, std::size_t concurrency) const {
        if (texts.empty()) fail(Errc::Precondition, "texts must be non-empty", "texts");
        if (concurrency == 0) fail(Errc::Precondition, "concurrency must be positive", "concurrency");
        std::vector<LabelBatchEntry> out(texts.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next++) < texts.size();) {
                try {
                    out[i].result = label(texts[i]);
                } catch (const Error& e) {
                    out[i].error_code = e.code();
                    out[i].error = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t n = std::min(concurrency, texts.size());
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        return out;
    }

private:
    std::string ask(const std::vector<ChatMessage>& messages) const {
        auto c = complete(*provider_, messages, params_);
        if (c.finish_reason == FinishReason::Error) {
            fail(Errc::ProviderHttpError, "label request failed mid-stream: " + c.error);
        }
        return c.text;
    }

    std::shared_ptr<Provider> provider_;
    LabelSchema schema_;
    GenerationParams params_;
};

/// CSV with columns text, labels (';'-joined), raw_response, error.
inline std::string label_results_csv(const std::vector<LabelBatchEntry>& entries,
                                     const std::vector<std::string>& texts) {
    std::string out = csv_line({"text", "labels", "raw_response", "error"});
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.result) {
            out += csv_line({e.result->text, join(e.result->labels, ";"), e.result->raw_response, ""});
        } else {
            out += csv_line({texts[i], "", "", e.error});
        }
    }
    return out;
}

}  // namespace lmforge
