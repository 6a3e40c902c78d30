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
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "lmforge/trainers/label_encoder.hpp"
#include "lmforge/util/binary_io.hpp"
#include "lmforge/util/csv.hpp"
#include "lmforge/util/rng.hpp"
#include "lmforge/util/strings.hpp"

namespace lmforge {

struct LabelledDataset {
    std::vector<std::string> texts;
    std::vector<std::size_t> labels;
    LabelEncoder encoder;
    std::size_t dropped = 0;  // rows with a blank text or label
};

inline LabelledDataset dataset_from_csv(std::string_view csv, const std::string& text_column,
                                        const std::string& label_column) {
    const auto table = parse_csv_table(csv);
    const auto ti = table.column(text_column);
    const auto li = table.column(label_column);
    LabelledDataset d;
    std::vector<std::string> raw_labels;
    for (const auto& row : table.rows) {
        if (is_blank(row[ti]) || is_blank(row[li])) {
            ++d.dropped;
            continue;
        }
        d.texts.push_back(row[ti]);
        raw_labels.emplace_back(trim(row[li]));
    }
    if (d.texts.empty()) fail(Errc::EmptyDataset, "no usable rows (" + std::to_string(d.dropped) + " dropped)");
    d.encoder = LabelEncoder::fit(raw_labels);
    d.labels = d.encoder.encode(raw_labels);
    return d;
}

inline LabelledDataset load_dataset(const std::filesystem::path& path, const std::string& text_column,
                                    const std::string& label_column) {
    return dataset_from_csv(read_file(path), text_column, label_column);
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;
};

/// Per class, round(eval_fraction * count) examples go to eval, keeping at
/// least one in train. Indices come back sorted.
inline Split stratified_split(const std::vector<std::size_t>& labels, std::size_t num_classes, double eval_fraction,
                              std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(labels[i]).push_back(i);
    Split s;
    for (auto& members : by_class) {
        rng.shuffle(members);
        auto n_eval = static_cast<std::size_t>(std::floor(eval_fraction * double(members.size()) + 0.5));
        if (members.size() > 0) n_eval = std::min(n_eval, members.size() - 1);
        s.eval.insert(s.eval.end(), members.begin(), members.begin() + std::ptrdiff_t(n_eval));
        s.train.insert(s.train.end(), members.begin() + std::ptrdiff_t(n_eval), members.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.eval.begin(), s.eval.end());
    return s;
}

/// Plain shuffled split (no strata).
inline Split random_split(std::size_t n, double eval_fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    auto n_eval = static_cast<std::size_t>(std::floor(eval_fraction * double(n) + 0.5));
    if (n > 0) n_eval = std::min(n_eval, n - 1);
    Split s{{idx.begin() + std::ptrdiff_t(n_eval), idx.end()}, {idx.begin(), idx.begin() + std::ptrdiff_t(n_eval)}};
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.eval.begin(), s.eval.end());
    return s;
}

}  // namespace lmforge
