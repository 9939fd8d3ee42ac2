// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaze3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Error raised when an input has the wrong shape/size for an operation.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised by geometric operations on degenerate inputs
/// (point behind camera, no valid cloud point, zero-norm direction).
class GeometryError : public std::runtime_error {
public:
    explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised by pose preprocessing (unrecognized layout, collapsed pose).
class PoseError : public std::runtime_error {
public:
    explicit PoseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised on dataset/manifest/checkpoint loading problems.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised when a training run fails (divergence, bad warm start).
class TrainError : public std::runtime_error {
  public:
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised on invalid experiment configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Collector for non-fatal warnings. Operations that promise a "warning
/// contract" append here when a sink is provided, otherwise the warning
/// goes to stderr.
class Warnings {
public:
    void add(const std::string& msg) { messages_.push_back(msg); }
    const std::vector<std::string>& messages() const { return messages_; }
    bool empty() const { return messages_.empty(); }
    std::size_t size() const { return messages_.size(); }

private:
    std::vector<std::string> messages_;
};

void emit_warning(Warnings* sink, const std::string& msg);

/// Dense row-major 2D grid of doubles. Shared container for depth maps,
/// saliency fields, heatmaps and masks.
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, double fill = 0.0)
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(height) * width, fill) {}

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
    double at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Grid& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Interleaved 8-bit image, HWC layout (RGB for 3 channels).
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ImageU8() = default;
    ImageU8(int h, int w, int c, std::uint8_t fill = 0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::uint8_t& at(int row, int col, int ch) {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    std::uint8_t at(int row, int col, int ch) const {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
};

/// Axis-aligned pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return width() <= 0 || height() <= 0; }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

}  // namespace gaze3d
