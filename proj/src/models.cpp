// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/models.hpp>

#include <cmath>

namespace gaze3d::models {

namespace {

constexpr double kNormEps = 1e-8;

nn::Sequential make_mlp(int in_dim, const std::vector<int>& dims, nn::Rng& rng) {
    nn::Sequential seq;
    int prev = in_dim;
    for (int d : dims) {
        seq.add(std::make_unique<nn::Linear>(prev, d, rng));
        seq.add(std::make_unique<nn::ReLU>());
        prev = d;
    }
    return seq;
}

}  // namespace

// ======================================================================
// GazeNetConfig
// ======================================================================

void GazeNetConfig::validate() const {
    if (pose_input_dim <= 0) throw ConfigError("gaze_net: pose_input_dim must be positive");
    if (pose_mlp_dims.empty() || depth_fc_dims.empty() || head_dims.empty()) {
        throw ConfigError("gaze_net: layer dimension lists must be nonempty");
    }
    for (int d : pose_mlp_dims) {
        if (d <= 0) throw ConfigError("gaze_net: pose_mlp_dims must be positive");
    }
    for (int d : depth_fc_dims) {
        if (d <= 0) throw ConfigError("gaze_net: depth_fc_dims must be positive");
    }
    for (int d : head_dims) {
        if (d <= 0) throw ConfigError("gaze_net: head_dims must be positive");
    }
    depth_encoder.validate();
    if (depth_encoder.in_channels != 1) {
        throw ConfigError("gaze_net: depth encoder must take one channel");
    }
    if (pose_mlp_dims.back() != attention_dim) {
        throw ConfigError("gaze_net: pose_mlp_dims must end at attention_dim");
    }
    if (depth_fc_dims.back() != attention_dim) {
        throw ConfigError("gaze_net: depth_fc_dims must end at attention_dim");
    }
    if (attention_heads <= 0 || attention_dim % attention_heads != 0) {
        throw ConfigError("gaze_net: attention_dim must be divisible by attention_heads");
    }
    if (attention_ffn_dim <= 0) throw ConfigError("gaze_net: attention_ffn_dim must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("gaze_net: dropout must be in [0, 1)");
}

GazeNetConfig GazeNetConfig::full() { return GazeNetConfig{}; }

GazeNetConfig GazeNetConfig::tiny() {
    GazeNetConfig cfg;
    cfg.pose_mlp_dims = {32, 32};
    cfg.depth_encoder = nn::ResNetConfig::tiny(1);
    cfg.depth_fc_dims = {32};
    cfg.dropout = 0.0;
    cfg.attention_dim = 32;
    cfg.attention_heads = 4;
    cfg.attention_ffn_dim = 64;
    cfg.head_dims = {32};
    return cfg;
}

// ======================================================================
// GazeNet
// ======================================================================

GazeNet::GazeNet(const GazeNetConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      rng_(seed),
      depth_encoder_(cfg.depth_encoder, rng_),
      fuse_(cfg.attention_dim, cfg.attention_heads, cfg.attention_ffn_dim, rng_) {
    pose_mlp_ = make_mlp(cfg_.pose_input_dim, cfg_.pose_mlp_dims, rng_);

    int prev = depth_encoder_.out_channels();
    for (std::size_t i = 0; i < cfg_.depth_fc_dims.size(); ++i) {
        const int d = cfg_.depth_fc_dims[i];
        depth_fc_.add(std::make_unique<nn::Linear>(prev, d, rng_));
        if (i + 1 < cfg_.depth_fc_dims.size()) {
            depth_fc_.add(std::make_unique<nn::ReLU>());
            depth_fc_.add(std::make_unique<nn::Dropout>(cfg_.dropout, &rng_));
        }
        prev = d;
    }

    int head_in = 2 * cfg_.attention_dim;
    for (int d : cfg_.head_dims) {
        head_.add(std::make_unique<nn::Linear>(head_in, d, rng_));
        head_.add(std::make_unique<nn::ReLU>());
        head_in = d;
    }
    head_.add(std::make_unique<nn::Linear>(head_in, 3, rng_));
}

Tensor GazeNet::forward(const Tensor& pose, const Tensor& depth, bool training) {
    if (pose.ndim() != 2 || pose.dim(1) != cfg_.pose_input_dim) {
        throw ShapeError("gaze_net: pose must be (N, " + std::to_string(cfg_.pose_input_dim) +
                         "), got " + nn::shape_string(pose.shape()));
    }
    if (depth.ndim() != 4 || depth.dim(1) != 1 || depth.dim(0) != pose.dim(0)) {
        throw ShapeError("gaze_net: depth must be (N, 1, H, W) matching the pose batch, got " +
                         nn::shape_string(depth.shape()));
    }
    const int n = pose.dim(0);
    const int d = cfg_.attention_dim;

    Tensor pose_feat = pose_mlp_.forward(pose, training);
    Tensor depth_feat = depth_fc_.forward(
        depth_pool_.forward(depth_encoder_.forward(depth, training), training), training);

    Tensor tokens({n, 2, d});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            tokens[(static_cast<std::size_t>(i) * 2) * d + j] = pose_feat.at(i, j);
            tokens[(static_cast<std::size_t>(i) * 2 + 1) * d + j] = depth_feat.at(i, j);
        }
    }

    Tensor encoded = fuse_.forward(tokens, training);
    raw_ = head_.forward(encoded.reshaped({n, 2 * d}), training);

    Tensor gaze({n, 3});
    norm_scale_ = Tensor({n});
    for (int i = 0; i < n; ++i) {
        const double nrm = std::sqrt(raw_.at(i, 0) * raw_.at(i, 0) +
                                     raw_.at(i, 1) * raw_.at(i, 1) +
                                     raw_.at(i, 2) * raw_.at(i, 2));
        const double s = std::max(nrm, kNormEps);
        norm_scale_[i] = s;
        for (int j = 0; j < 3; ++j) gaze.at(i, j) = raw_.at(i, j) / s;
    }
    return gaze;
}

void GazeNet::backward(const Tensor& grad_gaze) {
    const int n = raw_.dim(0);
    const int d = cfg_.attention_dim;
    if (grad_gaze.ndim() != 2 || grad_gaze.dim(0) != n || grad_gaze.dim(1) != 3) {
        throw ShapeError("gaze_net: gradient must be (N, 3)");
    }

    Tensor graw({n, 3});
    for (int i = 0; i < n; ++i) {
        const double s = norm_scale_[i];
        double y[3], g[3];
        for (int j = 0; j < 3; ++j) {
            y[j] = raw_.at(i, j) / s;
            g[j] = grad_gaze.at(i, j);
        }
        if (s > kNormEps) {
            const double dot = y[0] * g[0] + y[1] * g[1] + y[2] * g[2];
            for (int j = 0; j < 3; ++j) graw.at(i, j) = (g[j] - y[j] * dot) / s;
        } else {
            for (int j = 0; j < 3; ++j) graw.at(i, j) = g[j] / s;
        }
    }

    Tensor gtokens = fuse_.backward(head_.backward(graw).reshaped({n, 2, d}));

    Tensor gpose({n, cfg_.pose_mlp_dims.back()});
    Tensor gdepth({n, cfg_.depth_fc_dims.back()});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            gpose.at(i, j) = gtokens[(static_cast<std::size_t>(i) * 2) * d + j];
            gdepth.at(i, j) = gtokens[(static_cast<std::size_t>(i) * 2 + 1) * d + j];
        }
    }
    pose_mlp_.backward(gpose);
    depth_encoder_.backward(depth_pool_.backward(depth_fc_.backward(gdepth)));
}

std::vector<nn::Param*> GazeNet::parameters() {
    std::vector<nn::Param*> out;
    pose_mlp_.collect_params("gaze.pose_mlp", out);
    depth_encoder_.collect_params("gaze.depth_encoder", out);
    depth_fc_.collect_params("gaze.depth_fc", out);
    fuse_.collect_params("gaze.fuse", out);
    head_.collect_params("gaze.head", out);
    return out;
}

std::vector<nn::Buffer*> GazeNet::buffers() {
    std::vector<nn::Buffer*> out;
    depth_encoder_.collect_buffers("gaze.depth_encoder", out);
    return out;
}

std::size_t GazeNet::num_parameters() {
    std::size_t total = 0;
    for (const nn::Param* p : parameters()) total += p->value.numel();
    return total;
}

// ======================================================================
// HeatmapNetConfig
// ======================================================================

void HeatmapNetConfig::validate() const {
    encoder.validate();
    if (encoder.in_channels != 6) {
        throw ConfigError("heatmap_net: encoder must take six channels");
    }
    if (dec_channels1 <= 0 || dec_channels2 <= 0 || dec_channels3 <= 0 || dec_channels4 <= 0) {
        throw ConfigError("heatmap_net: decoder channel counts must be positive");
    }
}

HeatmapNetConfig HeatmapNetConfig::full() {
    HeatmapNetConfig cfg;
    cfg.encoder = nn::ResNetConfig::resnet50(6);
    return cfg;
}

HeatmapNetConfig HeatmapNetConfig::tiny() {
    HeatmapNetConfig cfg;
    cfg.encoder = nn::ResNetConfig::tiny(6);
    cfg.dec_channels1 = 16;
    cfg.dec_channels2 = 16;
    cfg.dec_channels3 = 8;
    cfg.dec_channels4 = 8;
    return cfg;
}

// ======================================================================
// HeatmapNet
// ======================================================================

HeatmapNet::HeatmapNet(const HeatmapNetConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)), rng_(seed), encoder_(cfg.encoder, rng_) {
    const int enc_out = encoder_.out_channels();
    decoder_.add(std::make_unique<nn::Conv2d>(enc_out, cfg_.dec_channels1, 1, 1, 0, rng_));
    decoder_.add(std::make_unique<nn::ReLU>());
    decoder_.add(std::make_unique<nn::Conv2d>(cfg_.dec_channels1, cfg_.dec_channels2, 3, 1, 1, rng_));
    decoder_.add(std::make_unique<nn::ReLU>());
    decoder_.add(std::make_unique<nn::ConvTranspose2d>(cfg_.dec_channels2, cfg_.dec_channels3, 4, 2,
                                                       1, rng_));
    decoder_.add(std::make_unique<nn::ReLU>());
    decoder_.add(std::make_unique<nn::ConvTranspose2d>(cfg_.dec_channels3, cfg_.dec_channels4, 4, 2,
                                                       1, rng_));
    decoder_.add(std::make_unique<nn::ReLU>());
    decoder_.add(std::make_unique<nn::ConvTranspose2d>(cfg_.dec_channels4, 1, 10, 2, 0, rng_));
    decoder_.add(std::make_unique<nn::Sigmoid>());
}

Tensor HeatmapNet::forward(const Tensor& x, bool training) {
    if (x.ndim() != 4 || x.dim(1) != 6) {
        throw ShapeError("heatmap_net: input must be (N, 6, H, W), got " +
                         nn::shape_string(x.shape()));
    }
    return decoder_.forward(encoder_.forward(x, training), training);
}

Tensor HeatmapNet::backward(const Tensor& grad_out) {
    return encoder_.backward(decoder_.backward(grad_out));
}

std::vector<nn::Param*> HeatmapNet::parameters() {
    std::vector<nn::Param*> out;
    encoder_.collect_params("heatmap.encoder", out);
    decoder_.collect_params("heatmap.decoder", out);
    return out;
}

std::vector<nn::Buffer*> HeatmapNet::buffers() {
    std::vector<nn::Buffer*> out;
    encoder_.collect_buffers("heatmap.encoder", out);
    return out;
}

std::size_t HeatmapNet::num_parameters() {
    std::size_t total = 0;
    for (const nn::Param* p : parameters()) total += p->value.numel();
    return total;
}

// ======================================================================
// Checkpoint helpers
// ======================================================================

void save_state(nn::TensorArchive& archive, const std::string& prefix,
                std::vector<nn::Param*> params, std::vector<nn::Buffer*> buffers) {
    for (const nn::Param* p : params) archive.put(prefix + p->name, p->value);
    for (const nn::Buffer* b : buffers) archive.put(prefix + b->name, b->value);
}

void load_state(const nn::TensorArchive& archive, const std::string& prefix,
                std::vector<nn::Param*> params, std::vector<nn::Buffer*> buffers) {
    auto restore = [&](const std::string& name, Tensor& dst) {
        const Tensor& src = archive.get(prefix + name);
        if (!src.same_shape(dst)) {
            throw DataError("checkpoint: shape mismatch for '" + prefix + name + "', stored " +
                            nn::shape_string(src.shape()) + ", expected " +
                            nn::shape_string(dst.shape()));
        }
        dst = src;
    };
    for (nn::Param* p : params) restore(p->name, p->value);
    for (nn::Buffer* b : buffers) restore(b->name, b->value);
}

}  // namespace gaze3d::models
