// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gaze3d/common.hpp>

#include <Eigen/Core>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace gaze3d::nn {

/// Tensor storage is pinned to Eigen's maximal SIMD alignment so that the
/// vectorized kernels peel identically regardless of where the allocator
/// happens to place a buffer; unaligned storage makes reduction order, and
/// therefore the last bits of every sum, depend on the pointer address.
using AlignedDoubles = std::vector<double, Eigen::aligned_allocator<double>>;

using Rng = std::mt19937_64;
using MatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Dense row-major double tensor with a dynamic shape. The workhorse of the
/// layer library; GEMM-shaped views go through Eigen maps.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(count(shape_), fill) {}

    static std::size_t count(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2D (rows, cols) accessor.
    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }

    // 4D (n, c, h, w) accessor.
    double& at(int n, int c, int h, int w) {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    double at(int n, int c, int h, int w) const {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    /// Same data, new shape; element count must match.
    Tensor reshaped(std::vector<int> shape) const {
        if (count(shape) != numel()) {
            throw ShapeError("tensor reshape: element count mismatch");
        }
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    void add_(const Tensor& other) {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    }
    void scale_(double a) {
        for (double& v : data_) v *= a;
    }

    MatrixMap as_matrix(int rows, int cols) { return MatrixMap(data(), rows, cols); }
    ConstMatrixMap as_matrix(int rows, int cols) const { return ConstMatrixMap(data(), rows, cols); }
    VectorMap as_vector() { return VectorMap(data(), static_cast<Eigen::Index>(numel())); }
    ConstVectorMap as_vector() const {
        return ConstVectorMap(data(), static_cast<Eigen::Index>(numel()));
    }

    void fill_normal(Rng& rng, double mean, double stddev) {
        std::normal_distribution<double> dist(mean, stddev);
        for (double& v : data_) v = dist(rng);
    }
    void fill_uniform(Rng& rng, double lo, double hi) {
        std::uniform_real_distribution<double> dist(lo, hi);
        for (double& v : data_) v = dist(rng);
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<int> shape_;
    AlignedDoubles data_;
};

std::string shape_string(const std::vector<int>& shape);

/// Named learnable parameter: value plus accumulated gradient.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    explicit Param(std::vector<int> shape) : value(shape), grad(std::move(shape)) {}
};

/// Named non-learnable state (batch-norm running statistics).
struct Buffer {
    std::string name;
    Tensor value;

    explicit Buffer(std::vector<int> shape) : value(std::move(shape)) {}
};

}  // namespace gaze3d::nn
