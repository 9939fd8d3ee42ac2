// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <gaze3d/nn/attention.hpp>
#include <gaze3d/nn/checkpoint.hpp>
#include <gaze3d/nn/layers.hpp>
#include <gaze3d/nn/resnet.hpp>
#include <gaze3d/pose.hpp>

namespace gaze3d::models {

using nn::Rng;
using nn::Tensor;

// ======================================================================
// Gaze network
// ======================================================================

/// Architecture of the gaze direction network. The full-size preset keeps
/// the published layout: a pose MLP and a 50-layer depth encoder fused by
/// one 4-head transformer encoder layer over 256-d tokens, followed by two
/// linear layers. The tiny preset shrinks every width for fast tests.
struct GazeNetConfig {
    int pose_input_dim = 2 * pose::kUpperBodyJointCount;
    std::vector<int> pose_mlp_dims = {64, 128, 256};

    nn::ResNetConfig depth_encoder = nn::ResNetConfig::resnet50(1);
    std::vector<int> depth_fc_dims = {512, 256};
    double dropout = 0.5;

    int attention_dim = 256;
    int attention_heads = 4;
    int attention_ffn_dim = 512;

    std::vector<int> head_dims = {256};

    void validate() const;

    static GazeNetConfig full();
    static GazeNetConfig tiny();
};

/// Predicts a unit 3D gaze direction from normalized upper-body keypoints
/// (flattened to pose_input_dim) and a single-channel depth image. Pose
/// and depth features become two tokens of a transformer encoder; the
/// concatenated output tokens feed the regression head, whose raw output
/// is normalized onto the unit sphere.
class GazeNet {
public:
    GazeNet(const GazeNetConfig& cfg, std::uint64_t seed);

    // Layers keep pointers into this object (dropout masks draw from the
    // owned RNG), so the network is pinned in place.
    GazeNet(const GazeNet&) = delete;
    GazeNet& operator=(const GazeNet&) = delete;

    /// pose: (N, pose_input_dim); depth: (N, 1, H, W). Returns (N, 3) unit rows.
    Tensor forward(const Tensor& pose, const Tensor& depth, bool training);

    /// grad_gaze: gradient w.r.t. the normalized output of the last forward.
    void backward(const Tensor& grad_gaze);

    std::vector<nn::Param*> parameters();
    std::vector<nn::Buffer*> buffers();
    std::size_t num_parameters();

    const GazeNetConfig& config() const { return cfg_; }
    Rng& rng() { return rng_; }

private:
    GazeNetConfig cfg_;
    Rng rng_;

    nn::Sequential pose_mlp_;
    nn::ResNetEncoder depth_encoder_;
    nn::GlobalAvgPool depth_pool_;
    nn::Sequential depth_fc_;
    nn::TransformerEncoderLayer fuse_;
    nn::Sequential head_;

    Tensor raw_;
    Tensor norm_scale_;
};

// ======================================================================
// Heatmap network
// ======================================================================

/// Architecture of the gaze target heatmap network: a residual encoder
/// over the six input channels (blurred RGB, head mask, field-of-view map,
/// sharpened field-of-view map) and a decoder of two convolutions and
/// three transposed convolutions ending in a sigmoid.
struct HeatmapNetConfig {
    nn::ResNetConfig encoder = nn::ResNetConfig::resnet50(6);
    int dec_channels1 = 512;
    int dec_channels2 = 256;
    int dec_channels3 = 128;
    int dec_channels4 = 64;

    void validate() const;

    static HeatmapNetConfig full();
    static HeatmapNetConfig tiny();
};

/// Maps a (N, 6, H, W) scene stack to a (N, 1, 64, 64) heatmap in [0, 1].
/// With the stride-32 encoder an input of 224x224 reaches the decoder as
/// 7x7 and leaves it as 64x64.
class HeatmapNet {
public:
    HeatmapNet(const HeatmapNetConfig& cfg, std::uint64_t seed);

    Tensor forward(const Tensor& x, bool training);

    /// Returns the gradient w.r.t. the 6-channel input, which carries the
    /// field-of-view channels' gradient back to the gaze network.
    Tensor backward(const Tensor& grad_out);

    std::vector<nn::Param*> parameters();
    std::vector<nn::Buffer*> buffers();
    std::size_t num_parameters();

    const HeatmapNetConfig& config() const { return cfg_; }
    Rng& rng() { return rng_; }

private:
    HeatmapNetConfig cfg_;
    Rng rng_;
    nn::ResNetEncoder encoder_;
    nn::Sequential decoder_;
};

// ======================================================================
// Checkpoint helpers
// ======================================================================

/// Writes parameters, buffers and optional optimizer state under stable
/// hierarchical names. `extra` entries are stored verbatim.
void save_state(nn::TensorArchive& archive, const std::string& prefix,
                std::vector<nn::Param*> params, std::vector<nn::Buffer*> buffers);

/// Restores parameters and buffers saved by save_state. Throws DataError
/// on a missing entry or a shape mismatch.
void load_state(const nn::TensorArchive& archive, const std::string& prefix,
                std::vector<nn::Param*> params, std::vector<nn::Buffer*> buffers);

}  // namespace gaze3d::models
