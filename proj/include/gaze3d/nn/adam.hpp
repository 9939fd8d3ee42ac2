// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <gaze3d/nn/tensor.hpp>

namespace gaze3d::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;

    void validate() const;
};

/// Adam with decoupled-from-nothing L2 weight decay (the decay term is
/// added to the gradient before the moment updates, matching the classic
/// formulation). Moment estimates and the step counter are exposed so a
/// checkpoint can restore the optimizer exactly.
class Adam {
public:
    Adam(std::vector<Param*> params, AdamConfig cfg);

    void zero_grad();
    void step();

    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::int64_t step_count() const { return static_cast<std::int64_t>(step_[0]); }

    /// Named state entries: per parameter "<name>.m" and "<name>.v",
    /// plus a scalar "step" tensor. Order is stable; restoring these
    /// tensors restores the optimizer exactly.
    std::vector<std::pair<std::string, Tensor*>> state_entries();

private:
    std::vector<Param*> params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    Tensor step_;
};

}  // namespace gaze3d::nn
