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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmforge/core/config.hpp"
#include "lmforge/embeddings/batch.hpp"
#include "lmforge/trainers/dataset.hpp"
#include "lmforge/trainers/metrics.hpp"
#include "lmforge/trainers/optimizer.hpp"

namespace lmforge {

/// Which embedding endpoint a head was trained against.
struct ProviderFingerprint {
    std::string url;
    std::string model;

    friend bool operator==(const ProviderFingerprint&, const ProviderFingerprint&) = default;
};

inline ProviderFingerprint fingerprint_of(const Provider& p) {
    return {p.endpoint().base_url, p.endpoint().model};
}

struct LossGrad {
    double loss = 0;
    Eigen::VectorXd grad;
};

/// Parameter layout: W (classes x dim, row-major), then b (classes).
inline Eigen::Index classifier_param_count(std::size_t classes, std::size_t dim) {
    return Eigen::Index(classes * dim + classes);
}

/// Mean softmax cross-entropy of X (rows are examples) and its gradient.
inline LossGrad softmax_cross_entropy(const Eigen::VectorXd& params, const Eigen::MatrixXd& X,
                                      std::span<const std::size_t> y, std::size_t classes) {
    const auto n = X.rows(), d = X.cols(), c = Eigen::Index(classes);
    require(params.size() == classifier_param_count(classes, std::size_t(d)), "parameter count mismatch");
    require(std::size_t(n) == y.size() && n > 0, "need one label per example");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> W(params.data(), c, d);
    const Eigen::Map<const Eigen::VectorXd> b(params.data() + c * d, c);

    Eigen::MatrixXd Z = X * W.transpose();
    Z.rowwise() += b.transpose();
    LossGrad out{0.0, Eigen::VectorXd::Zero(params.size())};
    Eigen::MatrixXd dZ(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = Z.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (Z.row(i).array() - m).exp();
        const double s = e.sum();
        out.loss += -(Z(i, Eigen::Index(y[i])) - m - std::log(s));
        dZ.row(i) = e / s;
        dZ(i, Eigen::Index(y[i])) -= 1.0;
    }
    out.loss /= double(n);
    dZ /= double(n);
    Eigen::Map<RowMajor> gW(out.grad.data(), c, d);
    gW = dZ.transpose() * X;
    out.grad.tail(c) = dZ.colwise().sum().transpose();
    return out;
}

struct ClassifierHead {
    LabelEncoder encoder;
    std::size_t dim = 0;
    Eigen::MatrixXf W;  // classes x dim
    Eigen::VectorXf b;
    ProviderFingerprint fingerprint;
    OptimizerConfig optimizer;

    /// Softmax distribution for one embedding.
    Eigen::VectorXd probabilities(std::span<const float> x) const {
        if (x.size() != dim) {
            fail(Errc::DimensionMismatch,
                 "embedding has dim " + std::to_string(x.size()) + ", head expects " + std::to_string(dim));
        }
        const Eigen::Map<const Eigen::VectorXf> v(x.data(), Eigen::Index(x.size()));
        Eigen::VectorXd z = W.cast<double>() * v.cast<double>() + b.cast<double>();
        z.array() -= z.maxCoeff();
        z = z.array().exp();
        return z / z.sum();
    }

    std::size_t predict(std::span<const float> x) const {
        Eigen::Index best;
        probabilities(x).maxCoeff(&best);
        return std::size_t(best);
    }
};

struct ClassifierReport {
    std::vector<double> epoch_loss;  // full training-set loss after each epoch
    double initial_loss = 0;
    double final_loss = 0;
    std::size_t train_size = 0;
    std::size_t eval_size = 0;
    std::optional<double> eval_accuracy;
    std::optional<double> eval_macro_f1;
};

struct TrainedClassifier {
    ClassifierHead head;
    ClassifierReport report;
};

namespace trainer_detail {

inline Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(Eigen::Index(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(Eigen::Index(i)) = X.row(Eigen::Index(idx[i]));
    return out;
}

template <class T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

inline Eigen::MatrixXd to_matrix(const std::vector<EmbeddingVector>& vecs) {
    const auto d = vecs.front().dim();
    Eigen::MatrixXd X(Eigen::Index(vecs.size()), Eigen::Index(d));
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        const auto v = vecs[i].values();
        for (std::size_t j = 0; j < d; ++j) X(Eigen::Index(i), Eigen::Index(j)) = v[j];
    }
    return X;
}

/// Shuffled minibatch loop shared by both trainers. `loss_grad(params,
/// rows)` evaluates a batch; `full_loss(params)` scores the whole train set.
template <class BatchFn, class FullFn>
std::vector<double> minibatch_train(Eigen::VectorXd& params, std::size_t n, const TrainingConfig& cfg,
                                    BatchFn&& loss_grad, FullFn&& full_loss, double& initial_loss) {
    Optimizer opt(optimizer_config_from(cfg), params.size());
    Rng rng(static_cast<std::uint64_t>(cfg.seed()) ^ 0x5eedULL);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    const std::size_t bs = std::max<std::size_t>(1, cfg.batch_size());
    initial_loss = full_loss(params);
    std::vector<double> epochs;
    std::uint64_t step = 0;
    for (std::uint32_t e = 0; e < cfg.num_train_epochs(); ++e) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += bs) {
            const std::vector<std::size_t> batch(order.begin() + std::ptrdiff_t(start),
                                                 order.begin() + std::ptrdiff_t(std::min(n, start + bs)));
            auto lg = loss_grad(params, batch);
            ++step;
            if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
                fail(Errc::NonFiniteLoss, "non-finite loss at step " + std::to_string(step), {}, step);
            }
            opt.step(params, std::move(lg.grad));
        }
        const double l = full_loss(params);
        if (!std::isfinite(l)) fail(Errc::NonFiniteLoss, "non-finite loss after epoch " + std::to_string(e + 1), {}, step);
        epochs.push_back(l);
    }
    return epochs;
}

}  // namespace trainer_detail

/// Trains a softmax head on precomputed embeddings (rows of X).
inline TrainedClassifier train_classifier_on_embeddings(const Eigen::MatrixXd& X, const std::vector<std::size_t>& y,
                                                        const LabelEncoder& encoder, const TrainingConfig& cfg,
                                                        ProviderFingerprint fingerprint = {}) {
    using namespace trainer_detail;
    const std::size_t C = encoder.size();
    if (C < 2) fail(Errc::SingleClass, "need at least two classes, got " + std::to_string(C));
    if (X.rows() == 0) fail(Errc::EmptyDataset, "no training examples");
    require(std::size_t(X.rows()) == y.size(), "one label per embedding");
    const std::size_t D = std::size_t(X.cols());

    const auto split = stratified_split(y, C, cfg.eval_fraction(), static_cast<std::uint64_t>(cfg.seed()));
    const Eigen::MatrixXd Xtr = rows_of(X, split.train);
    const auto ytr = pick(y, split.train);

    Eigen::VectorXd params = Eigen::VectorXd::Zero(classifier_param_count(C, D));
    TrainedClassifier out;
    auto& rep = out.report;
    rep.train_size = split.train.size();
    rep.eval_size = split.eval.size();
    rep.epoch_loss = minibatch_train(
        params, split.train.size(), cfg,
        [&](const Eigen::VectorXd& p, const std::vector<std::size_t>& batch) {
            return softmax_cross_entropy(p, rows_of(Xtr, batch), pick(ytr, batch), C);
        },
        [&](const Eigen::VectorXd& p) { return softmax_cross_entropy(p, Xtr, ytr, C).loss; }, rep.initial_loss);

    auto& h = out.head;
    h.encoder = encoder;
    h.dim = D;
    h.fingerprint = std::move(fingerprint);
    h.optimizer = optimizer_config_from(cfg);
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    h.W = Eigen::Map<const RowMajor>(params.data(), Eigen::Index(C), Eigen::Index(D)).cast<float>();
    h.b = params.tail(Eigen::Index(C)).cast<float>();

    // Report numbers describe the stored (f32) parameters.
    Eigen::VectorXd stored(params.size());
    Eigen::Map<RowMajor>(stored.data(), Eigen::Index(C), Eigen::Index(D)) = h.W.cast<double>();
    stored.tail(Eigen::Index(C)) = h.b.cast<double>();
    rep.final_loss = softmax_cross_entropy(stored, Xtr, ytr, C).loss;
    if (!split.eval.empty()) {
        std::vector<std::size_t> pred;
        for (auto i : split.eval) {
            const Eigen::VectorXf row = X.row(Eigen::Index(i)).cast<float>();
            pred.push_back(h.predict({row.data(), D}));
        }
        const auto truth = pick(y, split.eval);
        rep.eval_accuracy = accuracy(pred, truth);
        rep.eval_macro_f1 = macro_f1(pred, truth);
    }
    return out;
}

inline constexpr std::size_t kEmbedBatch = 64;

/// Embeds every text once, then trains the head.
inline TrainedClassifier train_classifier(const std::vector<std::string>& texts, const std::vector<std::string>& labels,
                                          Provider& provider, const TrainingConfig& cfg) {
    if (texts.empty()) fail(Errc::EmptyDataset, "no training texts");
    require(texts.size() == labels.size(), "one label per text");
    const auto encoder = LabelEncoder::fit(labels);
    if (encoder.size() < 2) fail(Errc::SingleClass, "all examples share the label '" + labels.front() + "'");
    const auto X = trainer_detail::to_matrix(embed_batch(provider, texts, kEmbedBatch));
    return train_classifier_on_embeddings(X, encoder.encode(labels), encoder, cfg, fingerprint_of(provider));
}

struct Prediction {
    std::string label;
    std::vector<double> probabilities;  // indexed like head.encoder.classes()
};

struct ClassifyOutput {
    std::vector<Prediction> predictions;
    std::vector<std::string> warnings;
};

inline ClassifyOutput classify(const ClassifierHead& head, Provider& provider, const std::vector<std::string>& texts) {
    ClassifyOutput out;
    const auto fp = fingerprint_of(provider);
    if (fp != head.fingerprint) {
        out.warnings.push_back("embedding provider (" + fp.url + ", " + fp.model + ") differs from training (" +
                               head.fingerprint.url + ", " + head.fingerprint.model + ")");
    }
    const auto vecs = embed_batch(provider, texts, kEmbedBatch);
    for (const auto& v : vecs) {
        const auto p = head.probabilities(v.values());
        Eigen::Index best;
        p.maxCoeff(&best);
        out.predictions.push_back({head.encoder.decode(std::size_t(best)), {p.data(), p.data() + p.size()}});
    }
    return out;
}

}  // namespace lmforge
