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

#include <set>
#include <vector>

#include "lmforge/util/error.hpp"

namespace lmforge {

inline double accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
    require(predicted.size() == truth.size() && !truth.empty(), "accuracy needs equal, non-empty inputs");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
    return double(hit) / double(truth.size());
}

/// Unweighted mean of per-class F1 over every class that occurs in either
/// the truth or the predictions.
inline double macro_f1(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
    require(predicted.size() == truth.size() && !truth.empty(), "macro_f1 needs equal, non-empty inputs");
    std::set<std::size_t> classes(truth.begin(), truth.end());
    classes.insert(predicted.begin(), predicted.end());
    double sum = 0;
    for (auto c : classes) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool p = predicted[i] == c, t = truth[i] == c;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }
        const double denom = double(2 * tp + fp + fn);
        sum += denom > 0 ? 2.0 * double(tp) / denom : 0.0;
    }
    return sum / double(classes.size());
}

}  // namespace lmforge
