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

#include <filesystem>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "lmforge/trainers/classifier.hpp"
#include "lmforge/trainers/mimicker.hpp"
#include "lmforge/util/binary_io.hpp"

namespace lmforge {

// Layout (little-endian):
//   "LMFMDL1\0" | u32 version | u32 kind | u32 header_len | JSON header
//   | f32 parameter blocks | u32 CRC32 of everything before it
inline constexpr std::string_view kModelMagic{"LMFMDL1\0", 8};
inline constexpr std::uint32_t kModelVersion = 1;

enum class ModelKind : std::uint32_t { Classifier = 1, LinearStudent = 2, MlpStudent = 3 };

using AnyModel = std::variant<ClassifierHead, StudentModel>;

namespace model_detail {

inline OptimizerConfig optimizer_from_json(const nlohmann::json& j) {
    OptimizerConfig c;
    c.kind = j.at("algorithm").get<std::string>() == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("max_grad_norm")) c.max_grad_norm = j["max_grad_norm"].get<double>();
    return c;
}

inline std::string frame(ModelKind kind, const nlohmann::json& header, const float* data, std::size_t n) {
    ByteWriter w;
    w.put_bytes(kModelMagic);
    w.put<std::uint32_t>(kModelVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(kind));
    const auto h = header.dump();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(h.size()));
    w.put_bytes(h);
    w.put_floats(data, n);
    w.seal();
    return w.bytes();
}

}  // namespace model_detail

inline std::string serialize_model(const ClassifierHead& h) {
    nlohmann::json header = {{"dim", h.dim},
                             {"classes", h.encoder.classes()},
                             {"provider", {{"url", h.fingerprint.url}, {"model", h.fingerprint.model}}},
                             {"optimizer", to_json(h.optimizer)}};
    // W is stored row-major.
    using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajorF W = h.W;
    std::vector<float> flat(W.data(), W.data() + W.size());
    flat.insert(flat.end(), h.b.data(), h.b.data() + h.b.size());
    return model_detail::frame(ModelKind::Classifier, header, flat.data(), flat.size());
}

inline std::string serialize_model(const StudentModel& m) {
    nlohmann::json header = {{"in_dim", m.spec.in_dim},
                             {"out_dim", m.spec.out_dim},
                             {"optimizer", to_json(m.optimizer)}};
    if (m.spec.kind == StudentKind::Mlp1) header["hidden"] = m.spec.hidden;
    const auto kind = m.spec.kind == StudentKind::Linear ? ModelKind::LinearStudent : ModelKind::MlpStudent;
    return model_detail::frame(kind, header, m.params.data(), std::size_t(m.params.size()));
}

inline AnyModel deserialize_model(std::string_view file) {
    const auto head = file.substr(0, std::min(file.size(), kModelMagic.size()));
    if (head == kModelMagic.substr(0, head.size()) && file.size() < kModelMagic.size() + 4) {
        fail(Errc::CorruptModel, "truncated model file", {}, file.size());
    }
    if (head != kModelMagic) {
        fail(Errc::VersionMismatch, "not an lmforge model file (bad magic)");
    }
    {
        ByteReader pre(file.substr(kModelMagic.size()), Errc::CorruptModel);
        const auto version = pre.get<std::uint32_t>("version");
        if (version != kModelVersion) {
            fail(Errc::VersionMismatch, "model format version " + std::to_string(version) + " is not supported (expected " +
                                            std::to_string(kModelVersion) + ")");
        }
    }
    const auto payload = verify_crc_trailer(file, Errc::CorruptModel);
    ByteReader r(payload, Errc::CorruptModel);
    r.get_bytes(kModelMagic.size(), "magic");
    r.get<std::uint32_t>("version");
    const auto kind = r.get<std::uint32_t>("kind");
    const auto hlen = r.get<std::uint32_t>("header length");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.get_bytes(hlen, "header"));
    } catch (const nlohmann::json::parse_error&) {
        r.corrupt("unparsable header");
    }
    auto read_floats = [&](std::size_t n) {
        std::vector<float> v(n);
        r.get_floats(v.data(), n, "parameters");
        if (r.remaining() != 0) r.corrupt("trailing bytes after parameters");
        return v;
    };
    try {
        if (kind == static_cast<std::uint32_t>(ModelKind::Classifier)) {
            ClassifierHead h;
            h.dim = header.at("dim").get<std::size_t>();
            h.encoder = LabelEncoder::from_classes(header.at("classes").get<std::vector<std::string>>());
            h.fingerprint = {header.at("provider").at("url").get<std::string>(),
                             header.at("provider").at("model").get<std::string>()};
            h.optimizer = model_detail::optimizer_from_json(header.at("optimizer"));
            const auto C = h.encoder.size();
            if (C < 2 || h.dim == 0) r.corrupt("classifier header has invalid shape");
            const auto flat = read_floats(C * h.dim + C);
            using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            h.W = Eigen::Map<const RowMajorF>(flat.data(), Eigen::Index(C), Eigen::Index(h.dim));
            h.b = Eigen::Map<const Eigen::VectorXf>(flat.data() + C * h.dim, Eigen::Index(C));
            return h;
        }
        if (kind == static_cast<std::uint32_t>(ModelKind::LinearStudent) ||
            kind == static_cast<std::uint32_t>(ModelKind::MlpStudent)) {
            StudentModel m;
            m.spec.kind = kind == static_cast<std::uint32_t>(ModelKind::LinearStudent) ? StudentKind::Linear
                                                                                       : StudentKind::Mlp1;
            m.spec.in_dim = header.at("in_dim").get<std::size_t>();
            m.spec.out_dim = header.at("out_dim").get<std::size_t>();
            m.spec.hidden = m.spec.kind == StudentKind::Mlp1 ? header.at("hidden").get<std::size_t>() : 0;
            m.optimizer = model_detail::optimizer_from_json(header.at("optimizer"));
            if (m.spec.in_dim == 0 || m.spec.out_dim == 0 || (m.spec.kind == StudentKind::Mlp1 && m.spec.hidden == 0)) {
                r.corrupt("student header has invalid shape");
            }
            const auto flat = read_floats(std::size_t(student_param_count(m.spec)));
            m.params = Eigen::Map<const Eigen::VectorXf>(flat.data(), Eigen::Index(flat.size()));
            return m;
        }
    } catch (const nlohmann::json::exception& e) {
        r.corrupt(std::string("malformed header: ") + e.what());
    }
    fail(Errc::CorruptModel, "unknown model kind " + std::to_string(kind));
}

inline void save_model(const std::filesystem::path& path, const AnyModel& m) {
    write_file(path, std::visit([](const auto& x) { return serialize_model(x); }, m));
}

inline AnyModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

inline ClassifierHead load_classifier(const std::filesystem::path& path) {
    auto m = load_model(path);
    if (auto* h = std::get_if<ClassifierHead>(&m)) return std::move(*h);
    fail(Errc::CorruptModel, path.string() + " holds a student model, not a classifier");
}

inline StudentModel load_student(const std::filesystem::path& path) {
    auto m = load_model(path);
    if (auto* s = std::get_if<StudentModel>(&m)) return std::move(*s);
    fail(Errc::CorruptModel, path.string() + " holds a classifier, not a student model");
}

}  // namespace lmforge
