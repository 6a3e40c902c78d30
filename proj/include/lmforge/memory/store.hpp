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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmforge/providers/types.hpp"
#include "lmforge/util/binary_io.hpp"
#include "lmforge/util/rng.hpp"
#include "lmforge/util/strings.hpp"

namespace lmforge {

struct Message {
    Role role = Role::User;
    std::string content;
    std::uint64_t seq = 0;  // 1-based, strictly increasing per conversation

    friend bool operator==(const Message&, const Message&) = default;
};

/// In-process conversation history keyed by conversation id, with an
/// optional append-only JSONL journal replayed on construction.
class ConversationStore {
public:
    ConversationStore() = default;

    explicit ConversationStore(std::filesystem::path journal) : journal_path_(std::move(journal)) {
        replay();
        journal_.open(*journal_path_, std::ios::app | std::ios::binary);
        if (!journal_) fail(Errc::Io, "cannot open journal " + journal_path_->string());
        if (unterminated_tail_) journal_ << '\n';
    }

    ConversationStore(const ConversationStore&) = delete;
    ConversationStore& operator=(const ConversationStore&) = delete;

    /// Fresh 128-bit id rendered as 32 lowercase hex digits.
    std::string new_conversation_id() {
        std::uint64_t hi, lo;
        {
            std::lock_guard lock(id_mutex_);
            hi = id_rng_.next_u64();
            lo = id_rng_.next_u64();
        }
        static constexpr char hex[] = "0123456789abcdef";
        std::string id(32, '0');
        for (int i = 0; i < 16; ++i) {
            id[15 - i] = hex[(hi >> (4 * i)) & 0xF];
            id[31 - i] = hex[(lo >> (4 * i)) & 0xF];
        }
        return id;
    }

    /// Appends one message, creating the conversation if needed. Returns the
    /// new message count.
    std::size_t append(const std::string& conv_id, Role role, std::string content) {
        check(role, content);
        auto conv = get_or_create(conv_id);
        std::lock_guard lock(conv->mutex);
        push(conv_id, *conv, role, std::move(content));
        return conv->messages.size();
    }

    /// Appends a user/assistant exchange as one unit, so concurrent requests
    /// on the same conversation never interleave their halves.
    std::size_t append_turn(const std::string& conv_id, std::string user, std::string assistant) {
        check(Role::User, user);
        check(Role::Assistant, assistant);
        auto conv = get_or_create(conv_id);
        std::lock_guard lock(conv->mutex);
        push(conv_id, *conv, Role::User, std::move(user));
        push(conv_id, *conv, Role::Assistant, std::move(assistant));
        return conv->messages.size();
    }

    /// The last `k` messages in order; empty for unknown ids.
    std::vector<Message> window(const std::string& conv_id, std::size_t k) const {
        auto conv = find(conv_id);
        if (!conv) return {};
        std::lock_guard lock(conv->mutex);
        const auto& m = conv->messages;
        const std::size_t n = std::min(k, m.size());
        return {m.end() - static_cast<std::ptrdiff_t>(n), m.end()};
    }

    std::size_t size(const std::string& conv_id) const {
        auto conv = find(conv_id);
        if (!conv) return 0;
        std::lock_guard lock(conv->mutex);
        return conv->messages.size();
    }

    bool contains(const std::string& conv_id) const { return find(conv_id) != nullptr; }

    std::size_t conversation_count() const {
        std::shared_lock lock(map_mutex_);
        return conversations_.size();
    }

private:
    struct Conversation {
        mutable std::mutex mutex;
        std::vector<Message> messages;
    };

    static void check(Role role, const std::string& content) {
        if (role == Role::System) fail(Errc::SystemRoleRejected, "system messages are not stored", "role");
        if (is_blank(content)) fail(Errc::Validation, "message content must be non-empty", "content");
    }

    std::shared_ptr<Conversation> find(const std::string& id) const {
        std::shared_lock lock(map_mutex_);
        const auto it = conversations_.find(id);
        return it == conversations_.end() ? nullptr : it->second;
    }

    std::shared_ptr<Conversation> get_or_create(const std::string& id) {
        if (id.empty()) fail(Errc::Validation, "conversation id must be non-empty", "conversation_id");
        if (auto c = find(id)) return c;
        std::unique_lock lock(map_mutex_);
        auto& slot = conversations_[id];
        if (!slot) slot = std::make_shared<Conversation>();
        return slot;
    }

    // Caller holds conv.mutex.
    void push(const std::string& id, Conversation& conv, Role role, std::string content) {
        Message m{role, std::move(content), conv.messages.size() + 1};
        if (journal_.is_open()) {
            const nlohmann::json line = {
                {"conv_id", id}, {"role", role_name(role)}, {"content", m.content}, {"seq", m.seq}};
            std::lock_guard lock(journal_mutex_);
            journal_ << line.dump() << '\n';
            journal_.flush();
            if (!journal_) fail(Errc::Io, "journal write failed");
        }
        conv.messages.push_back(std::move(m));
    }

    void replay() {
        if (!std::filesystem::exists(*journal_path_)) return;
        const std::string data = read_file(*journal_path_);
        std::size_t lineno = 0;
        for (std::size_t pos = 0; pos < data.size();) {
            const auto nl = data.find('\n', pos);
            const bool terminated = nl != std::string::npos;
            const std::string line = data.substr(pos, terminated ? nl - pos : std::string::npos);
            const std::size_t line_start = pos;
            pos = terminated ? nl + 1 : data.size();
            ++lineno;
            if (is_blank(line)) continue;
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                if (!terminated) {  // torn final write: drop it so appends start on a clean line
                    std::filesystem::resize_file(*journal_path_, line_start);
                    break;
                }
                fail(Errc::Io, "journal line " + std::to_string(lineno) + " is not JSON", {}, lineno);
            }
            try {
                const auto id = j.at("conv_id").get<std::string>();
                const auto role = parse_role(j.at("role").get<std::string>());
                auto content = j.at("content").get<std::string>();
                const auto seq = j.at("seq").get<std::uint64_t>();
                check(role, content);
                auto conv = get_or_create(id);
                if (seq != conv->messages.size() + 1) {
                    fail(Errc::Io, "journal line " + std::to_string(lineno) + " breaks the sequence of " + id, {},
                         lineno);
                }
                conv->messages.push_back({role, std::move(content), seq});
                unterminated_tail_ = !terminated;
            } catch (const nlohmann::json::exception& e) {
                fail(Errc::Io, "journal line " + std::to_string(lineno) + ": " + e.what(), {}, lineno);
            } catch (const Error& e) {
                if (e.code() == Errc::Io) throw;
                fail(Errc::Io, "journal line " + std::to_string(lineno) + ": " + e.what(), {}, lineno);
            }
        }
    }

    mutable std::shared_mutex map_mutex_;
    std::unordered_map<std::string, std::shared_ptr<Conversation>> conversations_;
    std::optional<std::filesystem::path> journal_path_;
    std::ofstream journal_;
    std::mutex journal_mutex_;
    bool unterminated_tail_ = false;
    std::mutex id_mutex_;
    Rng id_rng_{std::random_device{}() ^ (std::uint64_t(std::random_device{}()) << 32)};
};

}  // namespace lmforge
