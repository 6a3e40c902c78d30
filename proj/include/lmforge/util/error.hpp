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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lmforge {

enum class Errc {
    // core
    UnknownTaskKind,
    ConfigValidation,
    UnknownKey,
    InvalidValue,
    HeadDivisibility,
    NonPositiveField,
    // providers
    ProviderUnreachable,
    ProviderHttpError,
    MalformedStreamChunk,
    Timeout,
    // shared
    Precondition,
    DimensionMismatch,
    Io,
    // memory / service
    SystemRoleRejected,
    Validation,
    Unauthorized,
    BindFailure,
    // labeller
    UnparsableResponse,
    UnknownLabelInResponse,
    // embeddings / search
    ZeroVector,
    DuplicateDocId,
    EmptyIndex,
    UnknownDocId,
    CorruptIndex,
    VersionMismatch,
    // reranker
    ScoreCountMismatch,
    UnparsableScore,
    // tokenizer
    EmptyCorpus,
    UnknownTokenId,
    // trainers
    MissingColumn,
    EmptyDataset,
    MalformedCsv,
    SingleClass,
    ShapeMismatch,
    NonFiniteLoss,
    CorruptModel,
};

constexpr std::string_view errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::UnknownTaskKind: return "UnknownTaskKind";
        case Errc::ConfigValidation: return "ConfigValidation";
        case Errc::UnknownKey: return "UnknownKey";
        case Errc::InvalidValue: return "InvalidValue";
        case Errc::HeadDivisibility: return "HeadDivisibility";
        case Errc::NonPositiveField: return "NonPositiveField";
        case Errc::ProviderUnreachable: return "ProviderUnreachable";
        case Errc::ProviderHttpError: return "ProviderHTTPError";
        case Errc::MalformedStreamChunk: return "MalformedStreamChunk";
        case Errc::Timeout: return "Timeout";
        case Errc::Precondition: return "Precondition";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::Io: return "Io";
        case Errc::SystemRoleRejected: return "SystemRoleRejected";
        case Errc::Validation: return "Validation";
        case Errc::Unauthorized: return "Unauthorized";
        case Errc::BindFailure: return "BindFailure";
        case Errc::UnparsableResponse: return "UnparsableResponse";
        case Errc::UnknownLabelInResponse: return "UnknownLabelInResponse";
        case Errc::ZeroVector: return "ZeroVector";
        case Errc::DuplicateDocId: return "DuplicateDocId";
        case Errc::EmptyIndex: return "EmptyIndex";
        case Errc::UnknownDocId: return "UnknownDocId";
        case Errc::CorruptIndex: return "CorruptIndex";
        case Errc::VersionMismatch: return "VersionMismatch";
        case Errc::ScoreCountMismatch: return "ScoreCountMismatch";
        case Errc::UnparsableScore: return "UnparsableScore";
        case Errc::EmptyCorpus: return "EmptyCorpus";
        case Errc::UnknownTokenId: return "UnknownTokenId";
        case Errc::MissingColumn: return "MissingColumn";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::MalformedCsv: return "MalformedCsv";
        case Errc::SingleClass: return "SingleClass";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::NonFiniteLoss: return "NonFiniteLoss";
        case Errc::CorruptModel: return "CorruptModel";
    }
    return "Unknown";
}

/// The single exception type thrown by the library. `field()` names the
/// offending key/column/flag when there is one; `position()` carries a byte
/// offset, line, chunk or item index depending on the error.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::string field = {},
          std::optional<std::size_t> position = std::nullopt)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          field_(std::move(field)),
          position_(position) {}

    Errc code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }
    std::optional<std::size_t> position() const noexcept { return position_; }

private:
    Errc code_;
    std::string field_;
    std::optional<std::size_t> position_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message, std::string field = {},
                              std::optional<std::size_t> position = std::nullopt) {
    throw Error(code, message, std::move(field), position);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) fail(Errc::Precondition, message);
}

}  // namespace lmforge
