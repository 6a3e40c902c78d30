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
#include <string>

#include <Eigen/Dense>

#include "lmforge/core/config.hpp"
#include "lmforge/util/error.hpp"

namespace lmforge {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::optional<double> max_grad_norm;  // global L2 clip
};

inline OptimizerConfig optimizer_config_from(const TrainingConfig& t) {
    OptimizerConfig c;
    c.kind = t.optim() == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
    c.learning_rate = t.learning_rate();
    c.max_grad_norm = t.max_grad_norm();
    return c;
}

inline nlohmann::json to_json(const OptimizerConfig& c) {
    nlohmann::json j = {{"algorithm", c.kind == OptimizerKind::Sgd ? "sgd" : "adam"},
                        {"learning_rate", c.learning_rate}};
    if (c.kind == OptimizerKind::Adam) {
        j["beta1"] = c.beta1;
        j["beta2"] = c.beta2;
        j["epsilon"] = c.epsilon;
    }
    if (c.max_grad_norm) j["max_grad_norm"] = *c.max_grad_norm;
    return j;
}

/// Constant-rate first-order optimizer over one flat parameter vector.
class Optimizer {
public:
    Optimizer(OptimizerConfig cfg, Eigen::Index n) : cfg_(cfg) {
        if (!(cfg_.learning_rate > 0)) fail(Errc::ConfigValidation, "learning_rate must be > 0", "learning_rate");
        if (cfg_.max_grad_norm && !(*cfg_.max_grad_norm > 0)) {
            fail(Errc::ConfigValidation, "max_grad_norm must be > 0", "max_grad_norm");
        }
        if (cfg_.kind == OptimizerKind::Adam) {
            m_ = Eigen::VectorXd::Zero(n);
            v_ = Eigen::VectorXd::Zero(n);
        }
    }

    const OptimizerConfig& config() const noexcept { return cfg_; }
    std::uint64_t steps() const noexcept { return t_; }

    void step(Eigen::VectorXd& params, Eigen::VectorXd grad) {
        if (cfg_.max_grad_norm) {
            const double norm = grad.norm();
            if (norm > *cfg_.max_grad_norm) grad *= *cfg_.max_grad_norm / norm;
        }
        ++t_;
        if (cfg_.kind == OptimizerKind::Sgd) {
            params -= cfg_.learning_rate * grad;
            return;
        }
        m_ = cfg_.beta1 * m_ + (1 - cfg_.beta1) * grad;
        v_ = cfg_.beta2 * v_ + (1 - cfg_.beta2) * grad.cwiseProduct(grad);
        const double c1 = 1 - std::pow(cfg_.beta1, double(t_));
        const double c2 = 1 - std::pow(cfg_.beta2, double(t_));
        params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
    }

private:
    OptimizerConfig cfg_;
    Eigen::VectorXd m_, v_;
    std::uint64_t t_ = 0;
};

}  // namespace lmforge
