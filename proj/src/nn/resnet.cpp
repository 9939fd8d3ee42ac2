// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/nn/resnet.hpp>

#include <algorithm>

namespace gaze3d::nn {

void ResNetConfig::validate() const {
    if (in_channels <= 0 || stem_channels <= 0 || expansion <= 0) {
        throw ConfigError("resnet: channel counts must be positive");
    }
    if (mid_channels.empty() || mid_channels.size() != blocks.size()) {
        throw ConfigError("resnet: mid_channels and blocks must have equal, nonzero length");
    }
    for (std::size_t i = 0; i < mid_channels.size(); ++i) {
        if (mid_channels[i] <= 0 || blocks[i] <= 0) {
            throw ConfigError("resnet: stage sizes must be positive");
        }
    }
}

ResNetConfig ResNetConfig::resnet50(int in_channels) {
    ResNetConfig cfg;
    cfg.in_channels = in_channels;
    return cfg;
}

ResNetConfig ResNetConfig::tiny(int in_channels) {
    ResNetConfig cfg;
    cfg.in_channels = in_channels;
    cfg.stem_channels = 8;
    cfg.mid_channels = {2, 4, 6, 8};
    cfg.blocks = {1, 1, 1, 1};
    return cfg;
}

// ---------------------------------------------------------------- Bottleneck

Bottleneck::Bottleneck(int in_channels, int mid_channels, int out_channels, int stride, Rng& rng)
    : conv1_(in_channels, mid_channels, 1, 1, 0, rng, false),
      bn1_(mid_channels),
      conv2_(mid_channels, mid_channels, 3, stride, 1, rng, false),
      bn2_(mid_channels),
      conv3_(mid_channels, out_channels, 1, 1, 0, rng, false),
      bn3_(out_channels) {
    if (stride != 1 || in_channels != out_channels) {
        proj_ = std::make_unique<Conv2d>(in_channels, out_channels, 1, stride, 0, rng, false);
        proj_bn_ = std::make_unique<BatchNorm2d>(out_channels);
    }
}

Tensor Bottleneck::forward(const Tensor& x, bool training) {
    Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(x, training), training), training);
    h = relu2_.forward(bn2_.forward(conv2_.forward(h, training), training), training);
    h = bn3_.forward(conv3_.forward(h, training), training);

    if (proj_) {
        h.add_(proj_bn_->forward(proj_->forward(x, training), training));
    } else {
        h.add_(x);
    }
    sum_ = h;
    for (std::size_t i = 0; i < h.numel(); ++i) h[i] = std::max(0.0, h[i]);
    return h;
}

Tensor Bottleneck::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.numel(); ++i) {
        if (sum_[i] <= 0.0) g[i] = 0.0;
    }

    Tensor gx = conv1_.backward(bn1_.backward(
        relu1_.backward(conv2_.backward(bn2_.backward(relu2_.backward(conv3_.backward(
            bn3_.backward(g))))))));
    if (proj_) {
        gx.add_(proj_->backward(proj_bn_->backward(g)));
    } else {
        gx.add_(g);
    }
    return gx;
}

void Bottleneck::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    conv1_.collect_params(prefix + ".conv1", out);
    bn1_.collect_params(prefix + ".bn1", out);
    conv2_.collect_params(prefix + ".conv2", out);
    bn2_.collect_params(prefix + ".bn2", out);
    conv3_.collect_params(prefix + ".conv3", out);
    bn3_.collect_params(prefix + ".bn3", out);
    if (proj_) {
        proj_->collect_params(prefix + ".proj", out);
        proj_bn_->collect_params(prefix + ".proj_bn", out);
    }
}

void Bottleneck::collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) {
    bn1_.collect_buffers(prefix + ".bn1", out);
    bn2_.collect_buffers(prefix + ".bn2", out);
    bn3_.collect_buffers(prefix + ".bn3", out);
    if (proj_bn_) proj_bn_->collect_buffers(prefix + ".proj_bn", out);
}

// ---------------------------------------------------------------- ResNetEncoder

namespace {
const ResNetConfig& validated(const ResNetConfig& cfg) {
    cfg.validate();
    return cfg;
}
}  // namespace

ResNetEncoder::ResNetEncoder(const ResNetConfig& cfg, Rng& rng)
    : stem_conv_(validated(cfg).in_channels, cfg.stem_channels, 7, 2, 3, rng, false),
      stem_bn_(cfg.stem_channels),
      stem_pool_(3, 2, 1),
      out_channels_(cfg.out_channels()) {
    int in_ch = cfg.stem_channels;
    for (std::size_t s = 0; s < cfg.blocks.size(); ++s) {
        const int mid = cfg.mid_channels[s];
        const int out = mid * cfg.expansion;
        for (int b = 0; b < cfg.blocks[s]; ++b) {
            const int stride = (b == 0 && s > 0) ? 2 : 1;
            stages_.add(std::make_unique<Bottleneck>(in_ch, mid, out, stride, rng));
            in_ch = out;
        }
    }
}

Tensor ResNetEncoder::forward(const Tensor& x, bool training) {
    Tensor h = stem_pool_.forward(
        stem_relu_.forward(stem_bn_.forward(stem_conv_.forward(x, training), training), training),
        training);
    return stages_.forward(h, training);
}

Tensor ResNetEncoder::backward(const Tensor& grad_out) {
    Tensor g = stages_.backward(grad_out);
    return stem_conv_.backward(stem_bn_.backward(stem_relu_.backward(stem_pool_.backward(g))));
}

void ResNetEncoder::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    stem_conv_.collect_params(prefix + ".stem.conv", out);
    stem_bn_.collect_params(prefix + ".stem.bn", out);
    stages_.collect_params(prefix + ".stage", out);
}

void ResNetEncoder::collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) {
    stem_bn_.collect_buffers(prefix + ".stem.bn", out);
    stages_.collect_buffers(prefix + ".stage", out);
}

}  // namespace gaze3d::nn
