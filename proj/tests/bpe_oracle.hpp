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

// Brute-force BPE reference: recounts every adjacent pair from scratch at
// each step. Symbols are kept as their printable strings.

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline std::string utf8(unsigned cp) {
    std::string s;
    if (cp < 0x80) {
        s += char(cp);
    } else if (cp < 0x800) {
        s += char(0xC0 | (cp >> 6));
        s += char(0x80 | (cp & 0x3F));
    } else {
        s += char(0xE0 | (cp >> 12));
        s += char(0x80 | ((cp >> 6) & 0x3F));
        s += char(0x80 | (cp & 0x3F));
    }
    return s;
}

// Byte-to-printable table: printable Latin-1 bytes map to themselves, the
// remaining bytes to 256, 257, ... in byte order.
inline std::string glyph(unsigned char b) {
    static std::vector<std::string> table = [] {
        std::vector<int> keep;
        for (int c = 33; c <= 126; ++c) keep.push_back(c);
        for (int c = 161; c <= 172; ++c) keep.push_back(c);
        for (int c = 174; c <= 255; ++c) keep.push_back(c);
        std::vector<std::string> t(256);
        std::set<int> kept(keep.begin(), keep.end());
        int extra = 0;
        for (int b = 0; b < 256; ++b) t[b] = kept.count(b) ? utf8(b) : utf8(256 + extra++);
        return t;
    }();
    return table[b];
}

inline const std::string kEow = "\xE2\x96\x81";
inline const std::vector<std::string> kSpecials = {"<pad>", "<unk>", "<s>", "</s>", "<mask>"};

struct Step {
    std::string left, right;
    long count;
};

inline std::vector<Step> train(const std::vector<std::string>& lines, std::size_t vocab_size, long min_freq) {
    std::map<std::string, long> freq;
    for (const auto& line : lines) {
        std::istringstream in(line);
        for (std::string w; in >> w;) ++freq[w];
    }
    std::vector<std::pair<std::vector<std::string>, long>> words;
    for (const auto& [w, f] : freq) {
        std::vector<std::string> syms;
        for (unsigned char c : w) syms.push_back(glyph(c));
        syms.push_back(kEow);
        words.emplace_back(syms, f);
    }
    std::set<std::string> vocab(kSpecials.begin(), kSpecials.end());
    for (int b = 0; b < 256; ++b) vocab.insert(glyph(static_cast<unsigned char>(b)));
    vocab.insert(kEow);

    std::vector<Step> steps;
    std::set<std::pair<std::string, std::string>> banned;
    while (vocab.size() < vocab_size) {
        std::map<std::pair<std::string, std::string>, long> counts;
        for (const auto& [syms, f] : words)
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) counts[{syms[i], syms[i + 1]}] += f;
        // std::map iterates pairs in (left, right) string order, so the first
        // maximum found is the tie-break winner.
        const std::pair<std::string, std::string>* best = nullptr;
        long best_count = 0;
        for (const auto& [p, c] : counts) {
            if (banned.count(p)) continue;
            if (c > best_count) {
                best = &p;
                best_count = c;
            }
        }
        if (!best || best_count < min_freq) break;
        const auto pair = *best;
        const std::string merged = pair.first + pair.second;
        bool special = false;
        for (const auto& s : kSpecials) special |= (s == merged);
        if (special) {
            banned.insert(pair);
            continue;
        }
        steps.push_back({pair.first, pair.second, best_count});
        vocab.insert(merged);
        for (auto& [syms, f] : words) {
            std::vector<std::string> next;
            for (std::size_t i = 0; i < syms.size(); ++i) {
                if (i + 1 < syms.size() && syms[i] == pair.first && syms[i + 1] == pair.second) {
                    next.push_back(merged);
                    ++i;
                } else {
                    next.push_back(syms[i]);
                }
            }
            syms = next;
        }
    }
    return steps;
}

inline std::string canonicalize(const std::string& text) {
    std::istringstream in(text);
    std::string out;
    for (std::string w; in >> w;) out += (out.empty() ? "" : " ") + w;
    return out;
}

}  // namespace oracle
