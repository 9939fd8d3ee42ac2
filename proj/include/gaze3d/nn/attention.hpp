// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <gaze3d/nn/layers.hpp>
#include <gaze3d/nn/tensor.hpp>

namespace gaze3d::nn {

/// Multi-head scaled dot-product self-attention over (N, T, D) inputs.
///
/// All four projections (query, key, value, output) are D -> D linear maps
/// with bias. Attention weights of the most recent forward pass are cached
/// and exposed for inspection.
class MultiheadSelfAttention : public Layer {
public:
    MultiheadSelfAttention(int dim, int heads, Rng& rng);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    int dim() const { return dim_; }
    int heads() const { return heads_; }

    /// Attention weights of the last forward pass, shape (N, heads, T, T).
    const Tensor& last_attention() const { return attn_; }

    Param wq, wk, wv, wo;
    Param bq, bk, bv, bo;

private:
    int dim_ = 0;
    int heads_ = 0;
    int head_dim_ = 0;

    Tensor input_;
    Tensor q_, k_, v_;
    Tensor attn_;
    Tensor context_;
};

/// Post-norm transformer encoder layer:
///   x1 = LayerNorm(x + SelfAttention(x))
///   x2 = LayerNorm(x1 + Linear(ReLU(Linear(x1))))
class TransformerEncoderLayer : public Layer {
public:
    TransformerEncoderLayer(int dim, int heads, int ffn_dim, Rng& rng);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    MultiheadSelfAttention& attention() { return attn_; }

private:
    int dim_;
    MultiheadSelfAttention attn_;
    LayerNorm norm1_;
    LayerNorm norm2_;
    Linear ffn1_;
    ReLU ffn_act_;
    Linear ffn2_;

    std::vector<int> seq_shape_;
};

}  // namespace gaze3d::nn
