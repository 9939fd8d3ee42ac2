// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/nn/attention.hpp>

#include <cmath>

namespace gaze3d::nn {

// ---------------------------------------------------------------- MultiheadSelfAttention

MultiheadSelfAttention::MultiheadSelfAttention(int dim, int heads, Rng& rng)
    : wq({dim, dim}),
      wk({dim, dim}),
      wv({dim, dim}),
      wo({dim, dim}),
      bq({dim}),
      bk({dim}),
      bv({dim}),
      bo({dim}),
      dim_(dim),
      heads_(heads),
      head_dim_(dim / heads) {
    if (heads <= 0 || dim % heads != 0) {
        throw ConfigError("attention dim must be divisible by head count");
    }
    const double limit = std::sqrt(6.0 / (dim + dim));
    wq.value.fill_uniform(rng, -limit, limit);
    wk.value.fill_uniform(rng, -limit, limit);
    wv.value.fill_uniform(rng, -limit, limit);
    wo.value.fill_uniform(rng, -limit, limit);
}

Tensor MultiheadSelfAttention::forward(const Tensor& x, bool) {
    if (x.ndim() != 3 || x.dim(2) != dim_) {
        throw ShapeError("attention: expected (N, T, " + std::to_string(dim_) + "), got " +
                         shape_string(x.shape()));
    }
    input_ = x;
    const int n = x.dim(0), t = x.dim(1);
    const int rows = n * t;
    auto x_m = x.as_matrix(rows, dim_);

    auto project = [&](const Param& w, const Param& b) {
        Tensor y({n, t, dim_});
        auto y_m = y.as_matrix(rows, dim_);
        y_m.noalias() = x_m * w.value.as_matrix(dim_, dim_).transpose();
        y_m.rowwise() += b.value.as_vector().transpose();
        return y;
    };
    q_ = project(wq, bq);
    k_ = project(wk, bk);
    v_ = project(wv, bv);

    attn_ = Tensor({n, heads_, t, t});
    context_ = Tensor({n, t, dim_});
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

    for (int i = 0; i < n; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * t * dim_;
        ConstMatrixMap qm(q_.data() + off, t, dim_);
        ConstMatrixMap km(k_.data() + off, t, dim_);
        ConstMatrixMap vm(v_.data() + off, t, dim_);
        MatrixMap cm(context_.data() + off, t, dim_);
        for (int h = 0; h < heads_; ++h) {
            auto qh = qm.block(0, h * head_dim_, t, head_dim_);
            auto kh = km.block(0, h * head_dim_, t, head_dim_);
            auto vh = vm.block(0, h * head_dim_, t, head_dim_);
            MatrixMap a(attn_.data() + (static_cast<std::size_t>(i) * heads_ + h) *
                                           static_cast<std::size_t>(t) * t,
                        t, t);
            a.noalias() = qh * kh.transpose();
            a *= scale;
            for (int r = 0; r < t; ++r) {
                const double mx = a.row(r).maxCoeff();
                a.row(r) = (a.row(r).array() - mx).exp();
                a.row(r) /= a.row(r).sum();
            }
            cm.block(0, h * head_dim_, t, head_dim_).noalias() = a * vh;
        }
    }

    Tensor y({n, t, dim_});
    auto y_m = y.as_matrix(rows, dim_);
    y_m.noalias() = context_.as_matrix(rows, dim_) * wo.value.as_matrix(dim_, dim_).transpose();
    y_m.rowwise() += bo.value.as_vector().transpose();
    return y;
}

Tensor MultiheadSelfAttention::backward(const Tensor& grad_out) {
    const int n = input_.dim(0), t = input_.dim(1);
    const int rows = n * t;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

    auto g_m = grad_out.as_matrix(rows, dim_);
    wo.grad.as_matrix(dim_, dim_).noalias() += g_m.transpose() * context_.as_matrix(rows, dim_);
    bo.grad.as_vector().noalias() += g_m.colwise().sum().transpose();

    Tensor gctx({n, t, dim_});
    gctx.as_matrix(rows, dim_).noalias() = g_m * wo.value.as_matrix(dim_, dim_);

    Tensor gq({n, t, dim_}), gk({n, t, dim_}), gv({n, t, dim_});

    for (int i = 0; i < n; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * t * dim_;
        ConstMatrixMap qm(q_.data() + off, t, dim_);
        ConstMatrixMap km(k_.data() + off, t, dim_);
        ConstMatrixMap vm(v_.data() + off, t, dim_);
        ConstMatrixMap gcm(gctx.data() + off, t, dim_);
        MatrixMap gqm(gq.data() + off, t, dim_);
        MatrixMap gkm(gk.data() + off, t, dim_);
        MatrixMap gvm(gv.data() + off, t, dim_);
        for (int h = 0; h < heads_; ++h) {
            auto qh = qm.block(0, h * head_dim_, t, head_dim_);
            auto kh = km.block(0, h * head_dim_, t, head_dim_);
            auto vh = vm.block(0, h * head_dim_, t, head_dim_);
            auto gch = gcm.block(0, h * head_dim_, t, head_dim_);
            ConstMatrixMap a(attn_.data() + (static_cast<std::size_t>(i) * heads_ + h) *
                                                static_cast<std::size_t>(t) * t,
                             t, t);

            Eigen::MatrixXd ga = gch * vh.transpose();
            gvm.block(0, h * head_dim_, t, head_dim_).noalias() = a.transpose() * gch;

            Eigen::MatrixXd gs(t, t);
            for (int r = 0; r < t; ++r) {
                const double dot = (a.row(r).array() * ga.row(r).array()).sum();
                gs.row(r) = a.row(r).array() * (ga.row(r).array() - dot);
            }
            gqm.block(0, h * head_dim_, t, head_dim_).noalias() = scale * (gs * kh);
            gkm.block(0, h * head_dim_, t, head_dim_).noalias() = scale * (gs.transpose() * qh);
        }
    }

    auto x_m = input_.as_matrix(rows, dim_);
    Tensor gx({n, t, dim_});
    auto gx_m = gx.as_matrix(rows, dim_);
    auto back_proj = [&](const Tensor& gy, Param& w, Param& b) {
        auto gy_m = gy.as_matrix(rows, dim_);
        w.grad.as_matrix(dim_, dim_).noalias() += gy_m.transpose() * x_m;
        b.grad.as_vector().noalias() += gy_m.colwise().sum().transpose();
        gx_m.noalias() += gy_m * w.value.as_matrix(dim_, dim_);
    };
    back_proj(gq, wq, bq);
    back_proj(gk, wk, bk);
    back_proj(gv, wv, bv);
    return gx;
}

void MultiheadSelfAttention::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    wq.name = prefix + ".wq";
    wk.name = prefix + ".wk";
    wv.name = prefix + ".wv";
    wo.name = prefix + ".wo";
    bq.name = prefix + ".bq";
    bk.name = prefix + ".bk";
    bv.name = prefix + ".bv";
    bo.name = prefix + ".bo";
    for (Param* p : {&wq, &wk, &wv, &wo, &bq, &bk, &bv, &bo}) out.push_back(p);
}

// ---------------------------------------------------------------- TransformerEncoderLayer

TransformerEncoderLayer::TransformerEncoderLayer(int dim, int heads, int ffn_dim, Rng& rng)
    : dim_(dim),
      attn_(dim, heads, rng),
      norm1_(dim),
      norm2_(dim),
      ffn1_(dim, ffn_dim, rng),
      ffn2_(ffn_dim, dim, rng) {}

Tensor TransformerEncoderLayer::forward(const Tensor& x, bool training) {
    seq_shape_ = x.shape();
    const int rows = static_cast<int>(x.numel()) / dim_;

    Tensor a = attn_.forward(x, training);
    a.add_(x);
    Tensor x1 = norm1_.forward(a, training);

    Tensor f = ffn2_.forward(ffn_act_.forward(ffn1_.forward(x1.reshaped({rows, dim_}), training),
                                              training),
                             training);
    Tensor sum2 = f.reshaped(x.shape());
    sum2.add_(x1);
    return norm2_.forward(sum2, training);
}

Tensor TransformerEncoderLayer::backward(const Tensor& grad_out) {
    const int rows = static_cast<int>(grad_out.numel()) / dim_;

    Tensor g2 = norm2_.backward(grad_out);
    Tensor gf = ffn1_.backward(ffn_act_.backward(ffn2_.backward(g2.reshaped({rows, dim_}))));
    Tensor gx1 = g2;
    gx1.add_(gf.reshaped(seq_shape_));

    Tensor g1 = norm1_.backward(gx1);
    Tensor gx = attn_.backward(g1);
    gx.add_(g1);
    return gx;
}

void TransformerEncoderLayer::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    attn_.collect_params(prefix + ".attn", out);
    norm1_.collect_params(prefix + ".norm1", out);
    norm2_.collect_params(prefix + ".norm2", out);
    ffn1_.collect_params(prefix + ".ffn1", out);
    ffn2_.collect_params(prefix + ".ffn2", out);
}

}  // namespace gaze3d::nn
