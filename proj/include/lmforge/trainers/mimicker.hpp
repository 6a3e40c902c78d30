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

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmforge/trainers/classifier.hpp"
#include "lmforge/util/rng.hpp"
#include "lmforge/util/strings.hpp"

namespace lmforge {

enum class StudentKind { Linear, Mlp1 };

inline std::string_view student_kind_name(StudentKind k) { return k == StudentKind::Linear ? "linear" : "mlp1"; }

inline StudentKind parse_student_kind(std::string_view s) {
    if (s == "linear") return StudentKind::Linear;
    if (s == "mlp1") return StudentKind::Mlp1;
    fail(Errc::ConfigValidation, "student must be 'linear' or 'mlp1', got '" + std::string(s) + "'", "student");
}

struct StudentSpec {
    StudentKind kind = StudentKind::Linear;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::size_t hidden = 64;  // mlp1 only

    friend bool operator==(const StudentSpec&, const StudentSpec&) = default;
};

/// Parameter layout.
///   linear: W (out x in, row-major), b (out)
///   mlp1:   W1 (hidden x in), b1 (hidden), W2 (out x hidden), b2 (out); tanh
inline Eigen::Index student_param_count(const StudentSpec& s) {
    if (s.kind == StudentKind::Linear) return Eigen::Index(s.out_dim * s.in_dim + s.out_dim);
    return Eigen::Index(s.hidden * s.in_dim + s.hidden + s.out_dim * s.hidden + s.out_dim);
}

namespace student_detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Layer {
    Eigen::Map<const RowMajor> W;
    Eigen::Map<const Eigen::VectorXd> b;
};

inline Layer layer_at(const double* p, std::size_t out, std::size_t in) {
    return {Eigen::Map<const RowMajor>(p, Eigen::Index(out), Eigen::Index(in)),
            Eigen::Map<const Eigen::VectorXd>(p + out * in, Eigen::Index(out))};
}

struct Forward {
    Eigen::MatrixXd H;  // hidden activations (mlp1)
    Eigen::MatrixXd O;  // outputs, rows are examples
};

inline Forward forward(const Eigen::VectorXd& p, const StudentSpec& s, const Eigen::MatrixXd& X) {
    Forward f;
    if (s.kind == StudentKind::Linear) {
        const auto L = layer_at(p.data(), s.out_dim, s.in_dim);
        f.O = X * L.W.transpose();
        f.O.rowwise() += L.b.transpose();
        return f;
    }
    const auto L1 = layer_at(p.data(), s.hidden, s.in_dim);
    const auto L2 = layer_at(p.data() + s.hidden * s.in_dim + s.hidden, s.out_dim, s.hidden);
    Eigen::MatrixXd Z = X * L1.W.transpose();
    Z.rowwise() += L1.b.transpose();
    f.H = Z.array().tanh();
    f.O = f.H * L2.W.transpose();
    f.O.rowwise() += L2.b.transpose();
    return f;
}

}  // namespace student_detail

/// Student outputs for every row of X.
inline Eigen::MatrixXd student_forward(const Eigen::VectorXd& params, const StudentSpec& s, const Eigen::MatrixXd& X) {
    return student_detail::forward(params, s, X).O;
}

/// w1 * MSE (mean over all elements) + w2 * mean(1 - cos), with gradient.
inline LossGrad distill_loss(const Eigen::VectorXd& params, const StudentSpec& s, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& T, double w1, double w2) {
    using namespace student_detail;
    require(params.size() == student_param_count(s), "parameter count mismatch");
    const auto n = X.rows();
    require(n > 0 && T.rows() == n, "need one target per example");
    const auto f = forward(params, s, X);
    const Eigen::MatrixXd diff = f.O - T;
    LossGrad out{0.0, Eigen::VectorXd::Zero(params.size())};
    out.loss = w1 * diff.squaredNorm() / double(diff.size());
    Eigen::MatrixXd dO = (2.0 * w1 / double(diff.size())) * diff;
    if (w2 != 0) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double no = f.O.row(i).norm(), nt = T.row(i).norm();
            if (no == 0 || nt == 0) {
                out.loss += w2 / double(n);
                continue;
            }
            const double c = f.O.row(i).dot(T.row(i)) / (no * nt);
            out.loss += w2 * (1 - c) / double(n);
            dO.row(i) -= (w2 / double(n)) * (T.row(i) / (no * nt) - c * f.O.row(i) / (no * no));
        }
    }
    auto put = [&](double* dst, const Eigen::MatrixXd& dZ, const Eigen::MatrixXd& A) {
        Eigen::Map<RowMajor>(dst, dZ.cols(), A.cols()) = dZ.transpose() * A;
        Eigen::Map<Eigen::VectorXd>(dst + dZ.cols() * A.cols(), dZ.cols()) = dZ.colwise().sum().transpose();
    };
    if (s.kind == StudentKind::Linear) {
        put(out.grad.data(), dO, X);
        return out;
    }
    const std::size_t off2 = s.hidden * s.in_dim + s.hidden;
    put(out.grad.data() + off2, dO, f.H);
    const auto L2 = layer_at(params.data() + off2, s.out_dim, s.hidden);
    const Eigen::MatrixXd dZ = ((dO * L2.W).array() * (1.0 - f.H.array().square())).matrix();
    put(out.grad.data(), dZ, X);
    return out;
}

struct StudentModel {
    StudentSpec spec;
    Eigen::VectorXf params;
    OptimizerConfig optimizer;

    Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const {
        if (std::size_t(X.cols()) != spec.in_dim) {
            fail(Errc::ShapeMismatch, "student expects " + std::to_string(spec.in_dim) + " input features, got " +
                                          std::to_string(X.cols()));
        }
        return student_forward(params.cast<double>(), spec, X);
    }
};

struct StudentReport {
    std::vector<double> epoch_loss;
    double initial_loss = 0;
    double final_loss = 0;
    std::size_t train_size = 0;
    std::size_t eval_size = 0;
    std::optional<double> heldout_mse;
    std::optional<double> heldout_mean_cosine;
};

struct TrainedStudent {
    StudentModel model;
    StudentReport report;
};

/// Mean squared error over all elements and mean row-wise cosine.
inline std::pair<double, double> regression_metrics(const Eigen::MatrixXd& O, const Eigen::MatrixXd& T) {
    const double mse = (O - T).squaredNorm() / double(O.size());
    double cos = 0;
    for (Eigen::Index i = 0; i < O.rows(); ++i) {
        const double d = O.row(i).norm() * T.row(i).norm();
        cos += d > 0 ? O.row(i).dot(T.row(i)) / d : 0.0;
    }
    return {mse, cos / double(O.rows())};
}

inline Eigen::VectorXd init_student(const StudentSpec& s, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(student_param_count(s));
    auto fill = [&](Eigen::Index off, std::size_t rows, std::size_t cols) {
        const double sd = 1.0 / std::sqrt(double(cols));
        for (std::size_t i = 0; i < rows * cols; ++i) p[off + Eigen::Index(i)] = rng.gaussian() * sd;
    };
    if (s.kind == StudentKind::Linear) {
        fill(0, s.out_dim, s.in_dim);
    } else {
        fill(0, s.hidden, s.in_dim);
        fill(Eigen::Index(s.hidden * s.in_dim + s.hidden), s.out_dim, s.hidden);
    }
    return p;
}

/// Fits a student mapping rows of X to teacher rows of T.
inline TrainedStudent fit_student(StudentSpec spec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                                  const TrainingConfig& cfg) {
    using namespace trainer_detail;
    if (X.rows() == 0) fail(Errc::EmptyDataset, "no distillation examples");
    if (std::size_t(X.cols()) != spec.in_dim) {
        fail(Errc::ShapeMismatch, "features have " + std::to_string(X.cols()) + " columns, student expects " +
                                      std::to_string(spec.in_dim));
    }
    if (std::size_t(T.cols()) != spec.out_dim) {
        fail(Errc::ShapeMismatch, "teacher vectors have dim " + std::to_string(T.cols()) + ", student emits " +
                                      std::to_string(spec.out_dim));
    }
    if (T.rows() != X.rows()) fail(Errc::ShapeMismatch, "one teacher vector per example required");
    if (spec.kind == StudentKind::Mlp1 && spec.hidden == 0) {
        fail(Errc::ConfigValidation, "hidden must be > 0", "hidden");
    }
    if (spec.kind == StudentKind::Linear) spec.hidden = 0;
    const auto [w1, w2] = cfg.loss_weights();
    const auto seed = static_cast<std::uint64_t>(cfg.seed());
    const auto split = random_split(std::size_t(X.rows()), cfg.eval_fraction(), seed);
    const Eigen::MatrixXd Xtr = rows_of(X, split.train), Ttr = rows_of(T, split.train);

    Eigen::VectorXd params = init_student(spec, seed);
    TrainedStudent out;
    auto& rep = out.report;
    rep.train_size = split.train.size();
    rep.eval_size = split.eval.size();
    rep.epoch_loss = minibatch_train(
        params, split.train.size(), cfg,
        [&](const Eigen::VectorXd& p, const std::vector<std::size_t>& batch) {
            return distill_loss(p, spec, rows_of(Xtr, batch), rows_of(Ttr, batch), w1, w2);
        },
        [&](const Eigen::VectorXd& p) { return distill_loss(p, spec, Xtr, Ttr, w1, w2).loss; }, rep.initial_loss);

    out.model = {spec, params.cast<float>(), optimizer_config_from(cfg)};
    const Eigen::VectorXd stored = out.model.params.cast<double>();
    rep.final_loss = distill_loss(stored, spec, Xtr, Ttr, w1, w2).loss;
    if (!split.eval.empty()) {
        const Eigen::MatrixXd Xev = rows_of(X, split.eval);
        auto [mse, cos] = regression_metrics(student_forward(stored, spec, Xev), rows_of(T, split.eval));
        rep.heldout_mse = mse;
        rep.heldout_mean_cosine = cos;
    }
    return out;
}

using Featurizer = std::function<std::vector<float>(const std::string&)>;

/// Signed hashed bag of lowercase words, L2-normalized.
inline Featurizer hashed_bow_featurizer(std::size_t dim) {
    require(dim > 0, "featurizer dim must be > 0");
    return [dim](const std::string& text) {
        std::vector<float> v(dim, 0.0f);
        for (auto w : split_whitespace(text)) {
            std::string lower(w);
            for (auto& c : lower) c = char(std::tolower(static_cast<unsigned char>(c)));
            const auto h = fnv1a64(lower);
            v[h % dim] += (h >> 63) ? -1.0f : 1.0f;
        }
        double norm = 0;
        for (float x : v) norm += double(x) * x;
        if (norm > 0) {
            const float inv = float(1.0 / std::sqrt(norm));
            for (auto& x : v) x *= inv;
        }
        return v;
    };
}

/// Queries the teacher once per text, then fits the student.
inline TrainedStudent train_mimicker(StudentKind kind, std::size_t hidden, Provider& teacher,
                                    const std::vector<std::string>& texts, const Featurizer& featurize,
                                    const TrainingConfig& cfg) {
    if (texts.empty()) fail(Errc::EmptyDataset, "no distillation texts");
    const auto T = trainer_detail::to_matrix(embed_batch(teacher, texts, kEmbedBatch));
    std::vector<std::vector<float>> feats;
    for (const auto& t : texts) feats.push_back(featurize(t));
    Eigen::MatrixXd X(Eigen::Index(texts.size()), Eigen::Index(feats.front().size()));
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (feats[i].size() != std::size_t(X.cols())) fail(Errc::ShapeMismatch, "featurizer output dim varies");
        for (std::size_t j = 0; j < feats[i].size(); ++j) X(Eigen::Index(i), Eigen::Index(j)) = feats[i][j];
    }
    const StudentSpec spec{kind, std::size_t(X.cols()), std::size_t(T.cols()), hidden};
    return fit_student(spec, X, T, cfg);
}

}  // namespace lmforge
