// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <gaze3d/nn/layers.hpp>

namespace gaze3d::nn {

/// Residual encoder family. The default configuration is the classic
/// 50-layer bottleneck network; the test presets shrink channel counts
/// while keeping the depth and stride pattern, so a 224x224 input always
/// reduces to a 7x7 feature map.
struct ResNetConfig {
    int in_channels = 3;
    int stem_channels = 64;
    std::vector<int> mid_channels = {64, 128, 256, 512};
    std::vector<int> blocks = {3, 4, 6, 3};
    int expansion = 4;

    void validate() const;
    int out_channels() const { return mid_channels.back() * expansion; }

    static ResNetConfig resnet50(int in_channels);
    static ResNetConfig tiny(int in_channels);
};

/// Bottleneck residual block: 1x1 reduce, 3x3 (carries the stride),
/// 1x1 expand, each followed by batch norm; ReLU joins the skip path.
class Bottleneck : public Layer {
public:
    Bottleneck(int in_channels, int mid_channels, int out_channels, int stride, Rng& rng);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;
    void collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) override;

private:
    Conv2d conv1_;
    BatchNorm2d bn1_;
    ReLU relu1_;
    Conv2d conv2_;
    BatchNorm2d bn2_;
    ReLU relu2_;
    Conv2d conv3_;
    BatchNorm2d bn3_;
    std::unique_ptr<Conv2d> proj_;
    std::unique_ptr<BatchNorm2d> proj_bn_;
    Tensor sum_;
};

/// Stem (7x7 stride-2 conv, batch norm, ReLU, 3x3 stride-2 max pool)
/// followed by four bottleneck stages. Total downsampling factor 32.
class ResNetEncoder : public Layer {
public:
    ResNetEncoder(const ResNetConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;
    void collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) override;

    int out_channels() const { return out_channels_; }

private:
    Conv2d stem_conv_;
    BatchNorm2d stem_bn_;
    ReLU stem_relu_;
    MaxPool2d stem_pool_;
    Sequential stages_;
    int out_channels_;
};

}  // namespace gaze3d::nn
