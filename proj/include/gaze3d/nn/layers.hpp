// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gaze3d/nn/tensor.hpp>

#include <memory>
#include <string>
#include <vector>

namespace gaze3d::nn {

/// Base class of the layer library. One forward caches whatever the next
/// backward needs; training loops alternate forward/backward strictly.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(const std::string& prefix, std::vector<Param*>& out) {}
    virtual void collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) {}
};

/// y = x W^T + b over the last dimension; x is (N, in_features).
class Linear : public Layer {
public:
    Linear(int in_features, int out_features, Rng& rng);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    Param weight;  // (out, in)
    Param bias;    // (out)

private:
    int in_features_;
    int out_features_;
    Tensor input_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    Tensor input_;
};

class Sigmoid : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    Tensor output_;
};

/// Inverted dropout; identity in evaluation mode. Draws masks from the
/// shared RNG owned by the enclosing network.
class Dropout : public Layer {
public:
    Dropout(double prob, Rng* rng);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;

    double prob() const { return prob_; }

private:
    double prob_;
    Rng* rng_;
    Tensor mask_;
    bool train_pass_ = false;
};

/// 2D convolution on NCHW tensors, im2col + GEMM.
class Conv2d : public Layer {
public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, Rng& rng,
           bool with_bias = true);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    Param weight;  // (out_ch, in_ch * k * k)
    Param bias;    // (out_ch), unused when with_bias is false

    int out_size(int in_size) const { return (in_size + 2 * pad_ - kernel_) / stride_ + 1; }

private:
    int in_channels_, out_channels_, kernel_, stride_, pad_;
    bool with_bias_;
    Tensor input_;
};

/// 2D transposed convolution (the adjoint of Conv2d with the same
/// kernel/stride/pad). Output size = (in-1)*stride - 2*pad + kernel.
class ConvTranspose2d : public Layer {
public:
    ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad, Rng& rng);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    Param weight;  // (in_ch, out_ch * k * k)
    Param bias;    // (out_ch)

    int out_size(int in_size) const { return (in_size - 1) * stride_ - 2 * pad_ + kernel_; }

private:
    int in_channels_, out_channels_, kernel_, stride_, pad_;
    Tensor input_;
};

/// Per-channel batch normalization on NCHW tensors with running statistics.
class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;
    void collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) override;

    Param gamma;
    Param beta;
    Buffer running_mean;
    Buffer running_var;

private:
    int channels_;
    double momentum_, eps_;
    bool train_pass_ = false;
    Tensor x_hat_;
    std::vector<double> inv_std_;
};

class MaxPool2d : public Layer {
public:
    MaxPool2d(int kernel, int stride, int pad);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;

    int out_size(int in_size) const { return (in_size + 2 * pad_ - kernel_) / stride_ + 1; }

private:
    int kernel_, stride_, pad_;
    std::vector<int> argmax_;
    std::vector<int> in_shape_;
};

/// Global average pooling: (N, C, H, W) -> (N, C).
class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<int> in_shape_;
};

/// Layer normalization over the last dimension.
class LayerNorm : public Layer {
public:
    explicit LayerNorm(int dim, double eps = 1e-5);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    Param gamma;
    Param beta;

private:
    int dim_;
    double eps_;
    Tensor x_hat_;
    std::vector<double> inv_std_;
};

/// Ordered stack of layers applied in sequence.
class Sequential : public Layer {
public:
    Sequential() = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    std::size_t size() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;
    void collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) override;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// im2col/col2im used by the convolution layers; exposed for testing.
// cols has shape (C*k*k, out_h*out_w), row-major.
void im2col(const double* img, int channels, int height, int width, int kernel, int stride,
            int pad, double* cols);
void col2im(const double* cols, int channels, int height, int width, int kernel, int stride,
            int pad, double* img);

}  // namespace gaze3d::nn
