// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/nn/adam.hpp>

#include <cmath>

namespace gaze3d::nn {

void AdamConfig::validate() const {
    if (lr < 0.0 || weight_decay < 0.0) {
        throw ConfigError("adam: lr and weight_decay must be non-negative");
    }
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 || eps <= 0.0) {
        throw ConfigError("adam: betas must be in [0, 1) and eps positive");
    }
}

Adam::Adam(std::vector<Param*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg), step_({1}) {
    cfg_.validate();
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Param* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->grad.set_zero();
}

void Adam::step() {
    step_[0] += 1.0;
    const double t = step_[0];
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);

    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& value = params_[i]->value;
        const Tensor& grad = params_[i]->grad;
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < value.numel(); ++j) {
            const double g = grad[j] + cfg_.weight_decay * value[j];
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            value[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

std::vector<std::pair<std::string, Tensor*>> Adam::state_entries() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.reserve(params_.size() * 2 + 1);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        out.emplace_back(params_[i]->name + ".m", &m_[i]);
        out.emplace_back(params_[i]->name + ".v", &v_[i]);
    }
    out.emplace_back("step", &step_);
    return out;
}

}  // namespace gaze3d::nn
