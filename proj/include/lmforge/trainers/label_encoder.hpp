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

#include <string>
#include <unordered_map>
#include <vector>

#include "lmforge/util/error.hpp"

namespace lmforge {

/// Label string <-> dense id, ids assigned in first-occurrence order.
class LabelEncoder {
public:
    LabelEncoder() = default;

    static LabelEncoder fit(const std::vector<std::string>& labels) {
        LabelEncoder e;
        for (const auto& l : labels) e.add(l);
        return e;
    }

    static LabelEncoder from_classes(std::vector<std::string> classes) {
        LabelEncoder e;
        for (auto& c : classes) {
            if (e.index_.contains(c)) fail(Errc::CorruptModel, "duplicate class '" + c + "'");
            e.add(c);
        }
        return e;
    }

    std::size_t encode(const std::string& label) const {
        const auto it = index_.find(label);
        if (it == index_.end()) fail(Errc::InvalidValue, "unknown label '" + label + "'", label);
        return it->second;
    }

    std::vector<std::size_t> encode(const std::vector<std::string>& labels) const {
        std::vector<std::size_t> out;
        out.reserve(labels.size());
        for (const auto& l : labels) out.push_back(encode(l));
        return out;
    }

    const std::string& decode(std::size_t id) const {
        if (id >= classes_.size()) fail(Errc::InvalidValue, "class id " + std::to_string(id) + " out of range");
        return classes_[id];
    }

    const std::vector<std::string>& classes() const noexcept { return classes_; }
    std::size_t size() const noexcept { return classes_.size(); }

    friend bool operator==(const LabelEncoder& a, const LabelEncoder& b) { return a.classes_ == b.classes_; }

private:
    void add(const std::string& l) {
        if (index_.emplace(l, classes_.size()).second) classes_.push_back(l);
    }

    std::vector<std::string> classes_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace lmforge
