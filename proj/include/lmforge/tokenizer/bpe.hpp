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
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmforge/core/config.hpp"
#include "lmforge/util/binary_io.hpp"
#include "lmforge/util/strings.hpp"

namespace lmforge {

using TokenId = std::uint32_t;

namespace bpe_detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += char(cp);
    } else if (cp < 0x800) {
        out += char(0xC0 | (cp >> 6));
        out += char(0x80 | (cp & 0x3F));
    } else {
        out += char(0xE0 | (cp >> 12));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    }
}

/// Byte -> printable code point, as in the GPT-2 byte-level vocabulary.
inline const std::array<std::string, 256>& byte_glyphs() {
    static const auto table = [] {
        std::array<std::string, 256> t;
        std::uint32_t next = 256;
        for (std::uint32_t b = 0; b < 256; ++b) {
            const bool printable = (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE);
            append_utf8(t[b], printable ? b : next++);
        }
        return t;
    }();
    return table;
}

inline const std::unordered_map<std::string, unsigned char>& glyph_bytes() {
    static const auto table = [] {
        std::unordered_map<std::string, unsigned char> t;
        const auto& g = byte_glyphs();
        for (unsigned b = 0; b < 256; ++b) t.emplace(g[b], static_cast<unsigned char>(b));
        return t;
    }();
    return table;
}

}  // namespace bpe_detail

/// A vocabulary entry: raw bytes plus whether it closes a word.
struct TokenPiece {
    std::string bytes;
    bool end_of_word = false;

    friend bool operator==(const TokenPiece&, const TokenPiece&) = default;
};

/// Byte-level BPE vocabulary with ordered merges.
///
/// Ids 0-4 are the special tokens, 5-260 the 256 byte values, 261 the bare
/// end-of-word marker; merge products follow in training order.
class TokenizerModel {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;
    static constexpr TokenId kBos = 2;
    static constexpr TokenId kEos = 3;
    static constexpr TokenId kMask = 4;
    static constexpr TokenId kFirstByte = kSpecialTokenCount;
    static constexpr TokenId kEndOfWord = kFirstByte + kByteAlphabet;
    static constexpr TokenId kBaseVocab = kEndOfWord + 1;
    static constexpr std::string_view kEndOfWordGlyph = "\xE2\x96\x81";  // U+2581
    static constexpr std::array<std::string_view, kSpecialTokenCount> kSpecialNames = {"<pad>", "<unk>", "<s>",
                                                                                       "</s>", "<mask>"};
    static constexpr std::string_view kMergesHeader = "#version: lmforge-bpe 1";

    using Merge = std::pair<TokenId, TokenId>;

    explicit TokenizerModel(TokenizerConfig config = {}) : config_(validate_tokenizer_config(config)) {
        for (auto name : kSpecialNames) add_piece({std::string(name), false}, /*special=*/true);
        for (unsigned b = 0; b < kByteAlphabet; ++b) add_piece({std::string(1, char(b)), false}, false);
        add_piece({"", true}, false);
    }

    const TokenizerConfig& config() const noexcept { return config_; }
    std::size_t vocab_size() const noexcept { return pieces_.size(); }
    const std::vector<Merge>& merges() const noexcept { return merges_; }
    const TokenPiece& piece(TokenId id) const { return pieces_.at(id); }
    static constexpr bool is_special(TokenId id) noexcept { return id < kSpecialTokenCount; }

    /// Printable vocabulary string: byte glyphs, then U+2581 if the token
    /// ends a word. Specials render as their names.
    std::string token_string(TokenId id) const {
        if (is_special(id)) return std::string(kSpecialNames[id]);
        const auto& p = pieces_.at(id);
        std::string out;
        for (unsigned char b : p.bytes) out += bpe_detail::byte_glyphs()[b];
        if (p.end_of_word) out += kEndOfWordGlyph;
        return out;
    }

    std::optional<TokenId> find(std::string_view token) const {
        const auto it = by_string_.find(std::string(token));
        if (it == by_string_.end()) return std::nullopt;
        return it->second;
    }

    /// Records merge (left, right) and returns the id of the product.
    /// Products that already exist are reused rather than duplicated.
    TokenId add_merge(TokenId left, TokenId right) {
        const auto& l = pieces_.at(left);
        const auto& r = pieces_.at(right);
        if (is_special(left) || is_special(right) || l.end_of_word) {
            fail(Errc::Precondition, "invalid merge operands");
        }
        TokenPiece product{l.bytes + r.bytes, r.end_of_word};
        TokenId id;
        if (auto existing = find(render(product))) {
            id = *existing;
        } else {
            id = add_piece(std::move(product), false);
        }
        ranks_.emplace(key(left, right), std::pair{static_cast<std::uint32_t>(merges_.size()), id});
        merges_.emplace_back(left, right);
        return id;
    }

    /// Symbols of one whitespace-free word before any merge.
    static std::vector<TokenId> initial_symbols(std::string_view word) {
        std::vector<TokenId> s;
        s.reserve(word.size() + 1);
        for (unsigned char b : word) s.push_back(kFirstByte + b);
        s.push_back(kEndOfWord);
        return s;
    }

    /// Applies the merges to one word in training order (lowest rank first).
    std::vector<TokenId> encode_word(std::string_view word) const {
        auto s = initial_symbols(word);
        for (;;) {
            std::uint32_t best_rank = ~0u;
            TokenId product = 0;
            for (std::size_t i = 0; i + 1 < s.size(); ++i) {
                const auto it = ranks_.find(key(s[i], s[i + 1]));
                if (it != ranks_.end() && it->second.first < best_rank) {
                    best_rank = it->second.first;
                    product = it->second.second;
                }
            }
            if (best_rank == ~0u) break;
            const auto [left, right] = merges_[best_rank];
            std::vector<TokenId> next;
            next.reserve(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
                    next.push_back(product);
                    ++i;
                } else {
                    next.push_back(s[i]);
                }
            }
            s = std::move(next);
        }
        return s;
    }

    /// [bos, tokens..., eos], cut to max_length with eos kept last. Runs of
    /// whitespace separate words and are not otherwise preserved.
    std::vector<TokenId> encode(std::string_view text, std::optional<std::size_t> max_length = std::nullopt) const {
        const std::size_t limit = max_length.value_or(config_.max_length);
        std::vector<TokenId> ids{kBos};
        for (auto word : split_whitespace(text)) {
            const auto w = encode_word(word);
            ids.insert(ids.end(), w.begin(), w.end());
            if (ids.size() >= limit) break;
        }
        if (ids.size() + 1 > limit) ids.resize(limit > 0 ? limit - 1 : 0);
        ids.push_back(kEos);
        return ids;
    }

    /// Concatenates token bytes, turning end-of-word marks into single
    /// spaces; specials are dropped and a trailing space is removed.
    std::string decode(std::span<const TokenId> ids) const {
        std::string out;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const TokenId id = ids[i];
            if (id >= pieces_.size()) {
                fail(Errc::UnknownTokenId, "token id " + std::to_string(id) + " >= vocab size " +
                                               std::to_string(pieces_.size()), {}, i);
            }
            if (is_special(id)) continue;
            out += pieces_[id].bytes;
            if (pieces_[id].end_of_word) out += ' ';
        }
        if (!out.empty() && out.back() == ' ') out.pop_back();
        return out;
    }

    // --- persistence -----------------------------------------------------

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        nlohmann::ordered_json vocab = nlohmann::ordered_json::object();
        for (TokenId id = 0; id < pieces_.size(); ++id) vocab[token_string(id)] = id;
        write_file(dir / "vocab.json", vocab.dump(2) + "\n");
        std::string merges(kMergesHeader);
        merges += '\n';
        for (const auto& [l, r] : merges_) merges += token_string(l) + " " + token_string(r) + "\n";
        write_file(dir / "merges.txt", merges);
        write_file(dir / "tokenizer_config.json", to_json(config_).dump(2) + "\n");
    }

    static TokenizerModel load(const std::filesystem::path& dir) {
        TokenizerConfig cfg;
        if (std::filesystem::exists(dir / "tokenizer_config.json")) {
            cfg = tokenizer_config_from_json(json::parse(read_file(dir / "tokenizer_config.json")));
        }
        const auto vocab = nlohmann::ordered_json::parse(read_file(dir / "vocab.json"), nullptr, false);
        if (vocab.is_discarded() || !vocab.is_object()) fail(Errc::Io, "vocab.json is not a JSON object");
        TokenizerModel model(cfg);
        std::vector<std::string> by_id(vocab.size());
        for (const auto& [token, id] : vocab.items()) {
            if (!id.is_number_unsigned() || id.get<std::size_t>() >= by_id.size() || !by_id[id.get<std::size_t>()].empty()) {
                fail(Errc::Io, "vocab.json ids must be contiguous from 0", token);
            }
            by_id[id.get<std::size_t>()] = token;
        }
        for (TokenId id = 0; id < kBaseVocab; ++id) {
            if (id >= by_id.size() || by_id[id] != model.token_string(id)) {
                fail(Errc::Io, "vocab.json base alphabet mismatch at id " + std::to_string(id));
            }
        }
        std::ifstream in(dir / "merges.txt");
        if (!in) fail(Errc::Io, "cannot open merges.txt");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line.front() == '#') continue;
            const auto sp = line.find(' ');
            if (sp == std::string::npos || line.find(' ', sp + 1) != std::string::npos) {
                fail(Errc::Io, "merges.txt line " + std::to_string(lineno) + " is not 'left right'", {}, lineno);
            }
            const auto l = model.find(line.substr(0, sp));
            const auto r = model.find(line.substr(sp + 1));
            if (!l || !r) fail(Errc::Io, "merges.txt line " + std::to_string(lineno) + " names unknown tokens", {}, lineno);
            const auto product = model.add_merge(*l, *r);
            if (product >= by_id.size() || by_id[product] != model.token_string(product)) {
                fail(Errc::Io, "merges.txt line " + std::to_string(lineno) + " disagrees with vocab.json", {}, lineno);
            }
        }
        if (model.vocab_size() != by_id.size()) fail(Errc::Io, "vocab.json has tokens no merge produces");
        return model;
    }

private:
    static std::uint64_t key(TokenId l, TokenId r) noexcept { return (std::uint64_t(l) << 32) | r; }

    static std::string render(const TokenPiece& p) {
        std::string out;
        for (unsigned char b : p.bytes) out += bpe_detail::byte_glyphs()[b];
        if (p.end_of_word) out += kEndOfWordGlyph;
        return out;
    }

    TokenId add_piece(TokenPiece p, bool special) {
        const auto id = static_cast<TokenId>(pieces_.size());
        by_string_.emplace(special ? p.bytes : render(p), id);
        pieces_.push_back(std::move(p));
        return id;
    }

    TokenizerConfig config_;
    std::vector<TokenPiece> pieces_;
    std::unordered_map<std::string, TokenId> by_string_;
    std::vector<Merge> merges_;
    std::unordered_map<std::uint64_t, std::pair<std::uint32_t, TokenId>> ranks_;  // pair -> (rank, product)
};

namespace bpe_detail {

struct Word {
    std::vector<TokenId> symbols;
    std::uint64_t freq;
};

}  // namespace bpe_detail

/// Trains byte-level BPE. Each step merges the most frequent adjacent pair
/// whose count is >= min_frequency; ties go to the lexicographically smaller
/// left token string, then the smaller right token string. Stops at
/// vocab_size or when no pair qualifies. Products whose string would equal a
/// special token's name are never merged.
inline TokenizerModel train_bpe(std::span<const std::string> corpus, const TokenizerConfig& config) {
    validate_tokenizer_config(config);
    std::map<std::string, std::uint64_t, std::less<>> word_counts;
    for (const auto& line : corpus) {
        for (auto w : split_whitespace(line)) ++word_counts[std::string(w)];
    }
    if (word_counts.empty()) fail(Errc::EmptyCorpus, "corpus has no words");

    TokenizerModel model(config);
    std::vector<bpe_detail::Word> words;
    words.reserve(word_counts.size());
    for (const auto& [w, c] : word_counts) words.push_back({TokenizerModel::initial_symbols(w), c});

    using Pair = std::pair<TokenId, TokenId>;
    std::vector<std::string> names;  // token strings, grown with the vocab
    auto name = [&](TokenId id) -> const std::string& {
        while (names.size() <= id) names.push_back(model.token_string(TokenId(names.size())));
        return names[id];
    };

    std::map<Pair, std::int64_t> counts;
    std::map<Pair, std::set<std::size_t>> where;
    struct Entry {
        std::int64_t count;
        Pair pair;
    };
    auto better = [&](const Entry& a, const Entry& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.pair.first != b.pair.first) {
            const int c = name(a.pair.first).compare(name(b.pair.first));
            if (c != 0) return c < 0;
        }
        if (a.pair.second != b.pair.second) {
            const int c = name(a.pair.second).compare(name(b.pair.second));
            if (c != 0) return c < 0;
        }
        return a.pair < b.pair;
    };
    std::set<Entry, decltype(better)> queue(better);

    auto adjust = [&](const Pair& p, std::int64_t delta) {
        auto& c = counts[p];
        if (c > 0) queue.erase(Entry{c, p});
        c += delta;
        if (c > 0) queue.insert(Entry{c, p});
    };
    auto account = [&](std::size_t wi, std::int64_t sign) {
        const auto& w = words[wi];
        for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
            const Pair p{w.symbols[i], w.symbols[i + 1]};
            adjust(p, sign * std::int64_t(w.freq));
            if (sign > 0) where[p].insert(wi);
        }
    };
    for (std::size_t wi = 0; wi < words.size(); ++wi) account(wi, +1);

    std::set<Pair> banned;
    while (model.vocab_size() < config.vocab_size) {
        auto it = queue.begin();
        while (it != queue.end() && banned.contains(it->pair)) ++it;
        if (it == queue.end() || it->count < std::int64_t(config.min_frequency)) break;
        const Pair best = it->pair;
        const std::string product_name = name(best.first) + name(best.second);
        if (std::find(TokenizerModel::kSpecialNames.begin(), TokenizerModel::kSpecialNames.end(), product_name) !=
            TokenizerModel::kSpecialNames.end()) {
            banned.insert(best);
            continue;
        }
        const TokenId product = model.add_merge(best.first, best.second);
        const auto affected = where[best];
        for (std::size_t wi : affected) {
            auto& s = words[wi].symbols;
            bool present = false;
            for (std::size_t i = 0; i + 1 < s.size(); ++i) {
                if (s[i] == best.first && s[i + 1] == best.second) {
                    present = true;
                    break;
                }
            }
            if (!present) continue;
            account(wi, -1);
            std::vector<TokenId> next;
            next.reserve(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
                    next.push_back(product);
                    ++i;
                } else {
                    next.push_back(s[i]);
                }
            }
            s = std::move(next);
            account(wi, +1);
        }
    }
    return model;
}

inline TokenizerModel train_bpe(std::istream& corpus, const TokenizerConfig& config) {
    std::vector<std::string> lines;
    for (std::string line; std::getline(corpus, line);) lines.push_back(std::move(line));
    return train_bpe(lines, config);
}

}  // namespace lmforge
