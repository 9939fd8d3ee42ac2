// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/nn/layers.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gaze3d::nn {

namespace {

void check_2d(const Tensor& x, int features, const char* who) {
    if (x.ndim() != 2 || x.dim(1) != features) {
        throw ShapeError(std::string(who) + ": expected (N, " + std::to_string(features) +
                         "), got " + shape_string(x.shape()));
    }
}

void check_4d(const Tensor& x, int channels, const char* who) {
    if (x.ndim() != 4 || x.dim(1) != channels) {
        throw ShapeError(std::string(who) + ": expected (N, " + std::to_string(channels) +
                         ", H, W), got " + shape_string(x.shape()));
    }
}

}  // namespace

// ---------------------------------------------------------------- im2col

void im2col(const double* img, int channels, int height, int width, int kernel, int stride,
            int pad, double* cols) {
    const int out_h = (height + 2 * pad - kernel) / stride + 1;
    const int out_w = (width + 2 * pad - kernel) / stride + 1;
    const int span = out_h * out_w;
    for (int c = 0; c < channels; ++c) {
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj) {
                double* row = cols + (static_cast<std::size_t>(c) * kernel * kernel +
                                      static_cast<std::size_t>(ki) * kernel + kj) *
                                         span;
                for (int oh = 0; oh < out_h; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= height) {
                        std::fill(row + static_cast<std::size_t>(oh) * out_w,
                                  row + static_cast<std::size_t>(oh + 1) * out_w, 0.0);
                        continue;
                    }
                    const double* src = img + (static_cast<std::size_t>(c) * height + ih) * width;
                    for (int ow = 0; ow < out_w; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        row[static_cast<std::size_t>(oh) * out_w + ow] =
                            (iw >= 0 && iw < width) ? src[iw] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im(const double* cols, int channels, int height, int width, int kernel, int stride,
            int pad, double* img) {
    const int out_h = (height + 2 * pad - kernel) / stride + 1;
    const int out_w = (width + 2 * pad - kernel) / stride + 1;
    const int span = out_h * out_w;
    std::fill(img, img + static_cast<std::size_t>(channels) * height * width, 0.0);
    for (int c = 0; c < channels; ++c) {
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj) {
                const double* row = cols + (static_cast<std::size_t>(c) * kernel * kernel +
                                            static_cast<std::size_t>(ki) * kernel + kj) *
                                               span;
                for (int oh = 0; oh < out_h; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= height) continue;
                    double* dst = img + (static_cast<std::size_t>(c) * height + ih) * width;
                    for (int ow = 0; ow < out_w; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        if (iw >= 0 && iw < width) {
                            dst[iw] += row[static_cast<std::size_t>(oh) * out_w + ow];
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, Rng& rng)
    : weight({out_features, in_features}),
      bias({out_features}),
      in_features_(in_features),
      out_features_(out_features) {
    weight.value.fill_normal(rng, 0.0, std::sqrt(2.0 / in_features));
}

Tensor Linear::forward(const Tensor& x, bool) {
    check_2d(x, in_features_, "linear");
    input_ = x;
    const int n = x.dim(0);
    Tensor y({n, out_features_});
    y.as_matrix(n, out_features_).noalias() =
        x.as_matrix(n, in_features_) * weight.value.as_matrix(out_features_, in_features_).transpose();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < out_features_; ++j) y.at(i, j) += bias.value[j];
    }
    return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
    const int n = input_.dim(0);
    auto g = grad_out.as_matrix(n, out_features_);
    auto x = input_.as_matrix(n, in_features_);

    weight.grad.as_matrix(out_features_, in_features_).noalias() += g.transpose() * x;
    bias.grad.as_vector().noalias() += g.colwise().sum().transpose();

    Tensor gx({n, in_features_});
    gx.as_matrix(n, in_features_).noalias() = g * weight.value.as_matrix(out_features_, in_features_);
    return gx;
}

void Linear::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    weight.name = prefix + ".weight";
    bias.name = prefix + ".bias";
    out.push_back(&weight);
    out.push_back(&bias);
}

// ---------------------------------------------------------------- ReLU / Sigmoid

Tensor ReLU::forward(const Tensor& x, bool) {
    input_ = x;
    Tensor y = x;
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = std::max(0.0, y[i]);
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    Tensor gx = grad_out;
    for (std::size_t i = 0; i < gx.numel(); ++i) {
        if (input_[i] <= 0.0) gx[i] = 0.0;
    }
    return gx;
}

Tensor Sigmoid::forward(const Tensor& x, bool) {
    Tensor y = x;
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
    output_ = y;
    return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
    Tensor gx = grad_out;
    for (std::size_t i = 0; i < gx.numel(); ++i) {
        gx[i] *= output_[i] * (1.0 - output_[i]);
    }
    return gx;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double prob, Rng* rng) : prob_(prob), rng_(rng) {
    if (prob < 0.0 || prob >= 1.0) {
        throw ConfigError("dropout probability must be in [0, 1)");
    }
}

Tensor Dropout::forward(const Tensor& x, bool training) {
    train_pass_ = training && prob_ > 0.0;
    if (!train_pass_) return x;

    mask_ = Tensor(x.shape());
    std::bernoulli_distribution keep(1.0 - prob_);
    const double scale = 1.0 / (1.0 - prob_);
    Tensor y = x;
    for (std::size_t i = 0; i < y.numel(); ++i) {
        mask_[i] = keep(*rng_) ? scale : 0.0;
        y[i] *= mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (!train_pass_) return grad_out;
    Tensor gx = grad_out;
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] *= mask_[i];
    return gx;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, Rng& rng,
               bool with_bias)
    : weight({out_channels, in_channels * kernel * kernel}),
      bias({out_channels}),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      with_bias_(with_bias) {
    weight.value.fill_normal(rng, 0.0, std::sqrt(2.0 / (in_channels * kernel * kernel)));
}

Tensor Conv2d::forward(const Tensor& x, bool) {
    check_4d(x, in_channels_, "conv2d");
    input_ = x;
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    if (oh <= 0 || ow <= 0) {
        throw ShapeError("conv2d: input too small for kernel");
    }
    const int ckk = in_channels_ * kernel_ * kernel_;
    const int span = oh * ow;

    Tensor y({n, out_channels_, oh, ow});
    AlignedDoubles cols(static_cast<std::size_t>(ckk) * span);
    auto w_m = weight.value.as_matrix(out_channels_, ckk);
    const std::size_t in_stride = static_cast<std::size_t>(in_channels_) * h * w;
    const std::size_t out_stride = static_cast<std::size_t>(out_channels_) * span;

    for (int i = 0; i < n; ++i) {
        im2col(x.data() + i * in_stride, in_channels_, h, w, kernel_, stride_, pad_, cols.data());
        MatrixMap out_m(y.data() + i * out_stride, out_channels_, span);
        out_m.noalias() = w_m * ConstMatrixMap(cols.data(), ckk, span);
        if (with_bias_) {
            for (int c = 0; c < out_channels_; ++c) {
                out_m.row(c).array() += bias.value[c];
            }
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const int n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    const int ckk = in_channels_ * kernel_ * kernel_;
    const int span = oh * ow;

    Tensor gx(input_.shape());
    AlignedDoubles cols(static_cast<std::size_t>(ckk) * span);
    AlignedDoubles gcols(cols.size());
    auto w_m = weight.value.as_matrix(out_channels_, ckk);
    auto gw_m = weight.grad.as_matrix(out_channels_, ckk);
    const std::size_t in_stride = static_cast<std::size_t>(in_channels_) * h * w;
    const std::size_t out_stride = static_cast<std::size_t>(out_channels_) * span;

    for (int i = 0; i < n; ++i) {
        ConstMatrixMap g_m(grad_out.data() + i * out_stride, out_channels_, span);
        im2col(input_.data() + i * in_stride, in_channels_, h, w, kernel_, stride_, pad_,
               cols.data());
        gw_m.noalias() += g_m * ConstMatrixMap(cols.data(), ckk, span).transpose();
        if (with_bias_) {
            for (int c = 0; c < out_channels_; ++c) bias.grad[c] += g_m.row(c).sum();
        }
        MatrixMap gcols_m(gcols.data(), ckk, span);
        gcols_m.noalias() = w_m.transpose() * g_m;
        col2im(gcols.data(), in_channels_, h, w, kernel_, stride_, pad_, gx.data() + i * in_stride);
    }
    return gx;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    weight.name = prefix + ".weight";
    out.push_back(&weight);
    if (with_bias_) {
        bias.name = prefix + ".bias";
        out.push_back(&bias);
    }
}

// ---------------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride,
                                 int pad, Rng& rng)
    : weight({in_channels, out_channels * kernel * kernel}),
      bias({out_channels}),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {
    weight.value.fill_normal(rng, 0.0, std::sqrt(2.0 / (in_channels * kernel * kernel)));
}

Tensor ConvTranspose2d::forward(const Tensor& x, bool) {
    check_4d(x, in_channels_, "conv_transpose2d");
    input_ = x;
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    if (oh <= 0 || ow <= 0) {
        throw ShapeError("conv_transpose2d: invalid output size");
    }
    const int okk = out_channels_ * kernel_ * kernel_;
    const int span = h * w;

    Tensor y({n, out_channels_, oh, ow});
    AlignedDoubles cols(static_cast<std::size_t>(okk) * span);
    auto w_m = weight.value.as_matrix(in_channels_, okk);
    const std::size_t in_stride = static_cast<std::size_t>(in_channels_) * span;
    const std::size_t out_stride = static_cast<std::size_t>(out_channels_) * oh * ow;

    for (int i = 0; i < n; ++i) {
        ConstMatrixMap x_m(x.data() + i * in_stride, in_channels_, span);
        MatrixMap cols_m(cols.data(), okk, span);
        cols_m.noalias() = w_m.transpose() * x_m;
        col2im(cols.data(), out_channels_, oh, ow, kernel_, stride_, pad_,
               y.data() + i * out_stride);
        MatrixMap out_m(y.data() + i * out_stride, out_channels_, oh * ow);
        for (int c = 0; c < out_channels_; ++c) {
            out_m.row(c).array() += bias.value[c];
        }
    }
    return y;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
    const int n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    const int okk = out_channels_ * kernel_ * kernel_;
    const int span = h * w;

    Tensor gx(input_.shape());
    AlignedDoubles gcols(static_cast<std::size_t>(okk) * span);
    auto w_m = weight.value.as_matrix(in_channels_, okk);
    auto gw_m = weight.grad.as_matrix(in_channels_, okk);
    const std::size_t in_stride = static_cast<std::size_t>(in_channels_) * span;
    const std::size_t out_stride = static_cast<std::size_t>(out_channels_) * oh * ow;

    for (int i = 0; i < n; ++i) {
        im2col(grad_out.data() + i * out_stride, out_channels_, oh, ow, kernel_, stride_, pad_,
               gcols.data());
        ConstMatrixMap gcols_m(gcols.data(), okk, span);
        ConstMatrixMap x_m(input_.data() + i * in_stride, in_channels_, span);
        gw_m.noalias() += x_m * gcols_m.transpose();
        MatrixMap gx_m(gx.data() + i * in_stride, in_channels_, span);
        gx_m.noalias() = w_m * gcols_m;

        ConstMatrixMap g_m(grad_out.data() + i * out_stride, out_channels_, oh * ow);
        for (int c = 0; c < out_channels_; ++c) bias.grad[c] += g_m.row(c).sum();
    }
    return gx;
}

void ConvTranspose2d::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    weight.name = prefix + ".weight";
    bias.name = prefix + ".bias";
    out.push_back(&weight);
    out.push_back(&bias);
}

// ---------------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : gamma({channels}),
      beta({channels}),
      running_mean({channels}),
      running_var({channels}),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {
    for (int c = 0; c < channels; ++c) {
        gamma.value[c] = 1.0;
        running_var.value[c] = 1.0;
    }
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
    check_4d(x, channels_, "batch_norm2d");
    train_pass_ = training;
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t m = static_cast<std::size_t>(n) * h * w;
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    x_hat_ = Tensor(x.shape());
    inv_std_.assign(channels_, 0.0);
    Tensor y(x.shape());

    for (int c = 0; c < channels_; ++c) {
        double mean, var;
        if (training) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                const double* p = x.data() + (static_cast<std::size_t>(i) * channels_ + c) * plane;
                for (std::size_t j = 0; j < plane; ++j) sum += p[j];
            }
            mean = sum / static_cast<double>(m);
            double sq = 0.0;
            for (int i = 0; i < n; ++i) {
                const double* p = x.data() + (static_cast<std::size_t>(i) * channels_ + c) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    const double d = p[j] - mean;
                    sq += d * d;
                }
            }
            var = sq / static_cast<double>(m);
            const double unbiased = m > 1 ? sq / static_cast<double>(m - 1) : var;
            running_mean.value[c] = (1.0 - momentum_) * running_mean.value[c] + momentum_ * mean;
            running_var.value[c] = (1.0 - momentum_) * running_var.value[c] + momentum_ * unbiased;
        } else {
            mean = running_mean.value[c];
            var = running_var.value[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = inv_std;
        const double g = gamma.value[c], b = beta.value[c];
        for (int i = 0; i < n; ++i) {
            const std::size_t off = (static_cast<std::size_t>(i) * channels_ + c) * plane;
            const double* p = x.data() + off;
            double* xh = x_hat_.data() + off;
            double* o = y.data() + off;
            for (std::size_t j = 0; j < plane; ++j) {
                xh[j] = (p[j] - mean) * inv_std;
                o[j] = g * xh[j] + b;
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
    const int n = x_hat_.dim(0), h = x_hat_.dim(2), w = x_hat_.dim(3);
    const std::size_t m = static_cast<std::size_t>(n) * h * w;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor gx(x_hat_.shape());

    for (int c = 0; c < channels_; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t off = (static_cast<std::size_t>(i) * channels_ + c) * plane;
            const double* g = grad_out.data() + off;
            const double* xh = x_hat_.data() + off;
            for (std::size_t j = 0; j < plane; ++j) {
                sum_g += g[j];
                sum_gx += g[j] * xh[j];
            }
        }
        gamma.grad[c] += sum_gx;
        beta.grad[c] += sum_g;

        const double scale = gamma.value[c] * inv_std_[c];
        if (train_pass_) {
            const double inv_m = 1.0 / static_cast<double>(m);
            for (int i = 0; i < n; ++i) {
                const std::size_t off = (static_cast<std::size_t>(i) * channels_ + c) * plane;
                const double* g = grad_out.data() + off;
                const double* xh = x_hat_.data() + off;
                double* o = gx.data() + off;
                for (std::size_t j = 0; j < plane; ++j) {
                    o[j] = scale * (g[j] - inv_m * sum_g - xh[j] * inv_m * sum_gx);
                }
            }
        } else {
            for (int i = 0; i < n; ++i) {
                const std::size_t off = (static_cast<std::size_t>(i) * channels_ + c) * plane;
                const double* g = grad_out.data() + off;
                double* o = gx.data() + off;
                for (std::size_t j = 0; j < plane; ++j) o[j] = scale * g[j];
            }
        }
    }
    return gx;
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    gamma.name = prefix + ".gamma";
    beta.name = prefix + ".beta";
    out.push_back(&gamma);
    out.push_back(&beta);
}

void BatchNorm2d::collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) {
    running_mean.name = prefix + ".running_mean";
    running_var.name = prefix + ".running_var";
    out.push_back(&running_mean);
    out.push_back(&running_var);
}

// ---------------------------------------------------------------- MaxPool2d

MaxPool2d::MaxPool2d(int kernel, int stride, int pad) : kernel_(kernel), stride_(stride), pad_(pad) {}

Tensor MaxPool2d::forward(const Tensor& x, bool) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    in_shape_ = x.shape();
    Tensor y({n, c, oh, ow});
    argmax_.assign(y.numel(), -1);

    std::size_t out_idx = 0;
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const double* plane = x.data() + (static_cast<std::size_t>(i) * c + ch) *
                                                 static_cast<std::size_t>(h) * w;
            for (int ohh = 0; ohh < oh; ++ohh) {
                for (int oww = 0; oww < ow; ++oww, ++out_idx) {
                    double best = -std::numeric_limits<double>::infinity();
                    int best_idx = -1;
                    for (int ki = 0; ki < kernel_; ++ki) {
                        const int ih = ohh * stride_ - pad_ + ki;
                        if (ih < 0 || ih >= h) continue;
                        for (int kj = 0; kj < kernel_; ++kj) {
                            const int iw = oww * stride_ - pad_ + kj;
                            if (iw < 0 || iw >= w) continue;
                            const double v = plane[static_cast<std::size_t>(ih) * w + iw];
                            if (v > best) {
                                best = v;
                                best_idx = ih * w + iw;
                            }
                        }
                    }
                    y[out_idx] = best;
                    argmax_[out_idx] =
                        best_idx + static_cast<int>((static_cast<std::size_t>(i) * c + ch) *
                                                    static_cast<std::size_t>(h) * w);
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    Tensor gx(in_shape_);
    for (std::size_t i = 0; i < grad_out.numel(); ++i) {
        if (argmax_[i] >= 0) gx[static_cast<std::size_t>(argmax_[i])] += grad_out[i];
    }
    return gx;
}

// ---------------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, bool) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    in_shape_ = x.shape();
    Tensor y({n, c});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const double* p = x.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
            double sum = 0.0;
            for (std::size_t j = 0; j < plane; ++j) sum += p[j];
            y.at(i, ch) = sum / static_cast<double>(plane);
        }
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
    const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
    Tensor gx(in_shape_);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double inv = 1.0 / static_cast<double>(plane);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const double g = grad_out.at(i, ch) * inv;
            double* p = gx.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
            for (std::size_t j = 0; j < plane; ++j) p[j] = g;
        }
    }
    return gx;
}

// ---------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(int dim, double eps) : gamma({dim}), beta({dim}), dim_(dim), eps_(eps) {
    for (int i = 0; i < dim; ++i) gamma.value[i] = 1.0;
}

Tensor LayerNorm::forward(const Tensor& x, bool) {
    if (x.ndim() < 1 || x.shape().back() != dim_) {
        throw ShapeError("layer_norm: last dimension must be " + std::to_string(dim_));
    }
    const std::size_t rows = x.numel() / dim_;
    x_hat_ = Tensor(x.shape());
    inv_std_.assign(rows, 0.0);
    Tensor y(x.shape());

    for (std::size_t r = 0; r < rows; ++r) {
        const double* p = x.data() + r * dim_;
        double mean = 0.0;
        for (int j = 0; j < dim_; ++j) mean += p[j];
        mean /= dim_;
        double var = 0.0;
        for (int j = 0; j < dim_; ++j) {
            const double d = p[j] - mean;
            var += d * d;
        }
        var /= dim_;
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        inv_std_[r] = inv_std;
        double* xh = x_hat_.data() + r * dim_;
        double* o = y.data() + r * dim_;
        for (int j = 0; j < dim_; ++j) {
            xh[j] = (p[j] - mean) * inv_std;
            o[j] = gamma.value[j] * xh[j] + beta.value[j];
        }
    }
    return y;
}

Tensor LayerNorm::backward(const Tensor& grad_out) {
    const std::size_t rows = grad_out.numel() / dim_;
    Tensor gx(x_hat_.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* g = grad_out.data() + r * dim_;
        const double* xh = x_hat_.data() + r * dim_;
        double sum_gh = 0.0, sum_ghx = 0.0;
        for (int j = 0; j < dim_; ++j) {
            const double gh = g[j] * gamma.value[j];
            sum_gh += gh;
            sum_ghx += gh * xh[j];
            gamma.grad[j] += g[j] * xh[j];
            beta.grad[j] += g[j];
        }
        double* o = gx.data() + r * dim_;
        const double inv_d = 1.0 / dim_;
        for (int j = 0; j < dim_; ++j) {
            const double gh = g[j] * gamma.value[j];
            o[j] = inv_std_[r] * (gh - inv_d * sum_gh - xh[j] * inv_d * sum_ghx);
        }
    }
    return gx;
}

void LayerNorm::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    gamma.name = prefix + ".gamma";
    beta.name = prefix + ".beta";
    out.push_back(&gamma);
    out.push_back(&beta);
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x, bool training) {
    Tensor h = x;
    for (auto& layer : layers_) h = layer->forward(h, training);
    return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
    }
    return g;
}

void Sequential::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i]->collect_params(prefix + "." + std::to_string(i), out);
    }
}

void Sequential::collect_buffers(const std::string& prefix, std::vector<Buffer*>& out) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i]->collect_buffers(prefix + "." + std::to_string(i), out);
    }
}

}  // namespace gaze3d::nn
