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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lmforge/util/error.hpp"

namespace lmforge {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: comma separated, double-quoted fields may hold commas,
/// line breaks and "" escapes. LF and CRLF endings are both accepted.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    std::size_t line = 1;
    std::size_t i = 0;
    bool row_started = false;
    if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // UTF-8 BOM

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    while (i < text.size()) {
        const char c = text[i];
        if (c == '"' && field.empty()) {
            // Quoted field: must start at the field boundary.
            const std::size_t open_line = line;
            ++i;
            for (;;) {
                if (i >= text.size()) {
                    fail(Errc::MalformedCsv, "unterminated quoted field starting on line " + std::to_string(open_line),
                         {}, open_line);
                }
                if (text[i] == '"') {
                    if (i + 1 < text.size() && text[i + 1] == '"') {
                        field += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                if (text[i] == '\n') ++line;
                field += text[i++];
            }
            row_started = true;
            if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                fail(Errc::MalformedCsv, "unexpected character after closing quote on line " + std::to_string(line),
                     {}, line);
            }
            continue;
        }
        if (c == ',') {
            end_field();
            row_started = true;
            ++i;
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            end_row();
            ++line;
            i += 2;
        } else if (c == '\n') {
            end_row();
            ++line;
            ++i;
        } else {
            if (c == '"') {
                fail(Errc::MalformedCsv, "stray quote inside unquoted field on line " + std::to_string(line), {},
                     line);
            }
            field += c;
            row_started = true;
            ++i;
        }
    }
    if (row_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

/// A parsed file with a header row.
struct CsvTable {
    CsvRow header;
    std::vector<CsvRow> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        fail(Errc::MissingColumn, "missing column '" + std::string(name) + "'", std::string(name));
    }

    bool has_column(std::string_view name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

/// Header plus rows; every row must have the header's width. Blank lines
/// are skipped.
inline CsvTable parse_csv_table(std::string_view text) {
    auto rows = parse_csv(text);
    CsvTable t;
    std::size_t r = 0;
    while (r < rows.size() && rows[r].size() == 1 && rows[r][0].empty()) ++r;
    if (r == rows.size()) fail(Errc::EmptyDataset, "CSV has no header row");
    t.header = std::move(rows[r++]);
    for (std::size_t line = r; line < rows.size(); ++line) {
        auto& row = rows[line];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != t.header.size()) {
            fail(Errc::MalformedCsv,
                 "record " + std::to_string(line + 1) + " has " + std::to_string(row.size()) + " fields, header has " +
                     std::to_string(t.header.size()),
                 {}, line + 1);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string csv_escape(std::string_view field) {
    const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                       (!field.empty() && (field.front() == ' ' || field.back() == ' '));
    if (!quote) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_line(const CsvRow& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(row[i]);
    }
    out += "\r\n";
    return out;
}

}  // namespace lmforge
