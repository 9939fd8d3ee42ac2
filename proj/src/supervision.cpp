// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/supervision.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gaze3d::supervision {

using geometry::GazeVector;

std::string MetricReport::to_record() const {
    std::ostringstream os;
    os.precision(9);
    os << "dist_3d=" << dist_3d << " angle_error=" << angle_error << " auc=" << auc
       << " dist_2d=" << dist_2d;
    return os.str();
}

double gaze_loss(const Vec3& gt, const Vec3& pred, Warnings* sink) {
    const GazeVector g = GazeVector::normalized(gt, sink);
    const GazeVector p = GazeVector::normalized(pred, sink);
    return 1.0 - g.dot(p.dir);
}

double heatmap_loss(const Grid& pred, const Grid& gt) {
    if (!pred.same_shape(gt)) {
        throw ShapeError("heatmap_loss: shape mismatch");
    }
    double sum = 0.0;
    const std::size_t n = pred.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred.data()[i] - gt.data()[i];
        sum += d * d;
    }
    return sum / static_cast<double>(n);
}

double total_loss(double l_heat, double l_gaze, const LossWeights& w) {
    w.validate();
    return w.w_heat * l_heat + w.w_gaze * l_gaze;
}

Grid gaussian_gt_heatmap(const Vec2& target_cell_xy, double sigma, int size, Warnings* sink) {
    if (sigma <= 0.0) {
        throw std::invalid_argument("gaussian_gt_heatmap: sigma must be positive");
    }
    int tx = static_cast<int>(std::lround(target_cell_xy.x()));
    int ty = static_cast<int>(std::lround(target_cell_xy.y()));
    if (tx < 0 || tx >= size || ty < 0 || ty >= size) {
        emit_warning(sink, "gaussian_gt_heatmap: target (" + std::to_string(tx) + "," +
                               std::to_string(ty) + ") outside " + std::to_string(size) +
                               "-grid, clamping");
        tx = std::clamp(tx, 0, size - 1);
        ty = std::clamp(ty, 0, size - 1);
    }
    Grid out(size, size, 0.0);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            const double dy = i - ty;
            const double dx = j - tx;
            out.at(i, j) = std::exp(-(dy * dy + dx * dx) * inv);
        }
    }
    return out;
}

double metric_dist3d(const Vec3& pred, const Vec3& gt) { return (pred - gt).norm(); }

double metric_angle_deg(const Vec3& gt, const Vec3& pred) {
    Warnings ignored;
    const GazeVector g = GazeVector::normalized(gt, &ignored);
    const GazeVector p = GazeVector::normalized(pred, &ignored);
    const double cos_sim = std::clamp(g.dot(p.dir), -1.0, 1.0);
    return std::acos(cos_sim) * 180.0 / std::numbers::pi;
}

Grid resize_bilinear(const Grid& src, int out_height, int out_width) {
    Grid out(out_height, out_width, 0.0);
    const double sy = static_cast<double>(src.height()) / out_height;
    const double sx = static_cast<double>(src.width()) / out_width;
    for (int i = 0; i < out_height; ++i) {
        double fy = (i + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height() - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height() - 1);
        const double wy = fy - y0;
        for (int j = 0; j < out_width; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width() - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width() - 1);
            const double wx = fx - x0;
            out.at(i, j) = (1.0 - wy) * ((1.0 - wx) * src.at(y0, x0) + wx * src.at(y0, x1)) +
                           wy * ((1.0 - wx) * src.at(y1, x0) + wx * src.at(y1, x1));
        }
    }
    return out;
}

double metric_auc(const Grid& pred_heatmap, int gt_u, int gt_v, int scene_width,
                  int scene_height) {
    for (std::size_t i = 0; i < pred_heatmap.size(); ++i) {
        if (pred_heatmap.data()[i] < 0.0 || !std::isfinite(pred_heatmap.data()[i])) {
            throw std::invalid_argument("metric_auc: heatmap must be finite and non-negative");
        }
    }
    gt_u = std::clamp(gt_u, 0, scene_width - 1);
    gt_v = std::clamp(gt_v, 0, scene_height - 1);

    const Grid scores = resize_bilinear(pred_heatmap, scene_height, scene_width);
    const double positive = scores.at(gt_v, gt_u);

    std::size_t below = 0, ties = 0;
    for (int r = 0; r < scores.height(); ++r) {
        for (int c = 0; c < scores.width(); ++c) {
            if (r == gt_v && c == gt_u) continue;
            const double s = scores.at(r, c);
            if (s < positive) {
                ++below;
            } else if (s == positive) {
                ++ties;
            }
        }
    }
    const std::size_t negatives = scores.size() - 1;
    return (static_cast<double>(below) + 0.5 * static_cast<double>(ties)) /
           static_cast<double>(negatives);
}

double metric_dist2d(const Grid& pred_heatmap, const Vec2& gt_target_norm) {
    const Eigen::Vector2i peak = geometry::argmax_cell(pred_heatmap);
    const Vec2 pred_norm((peak.x() + 0.5) / pred_heatmap.width(),
                         (peak.y() + 0.5) / pred_heatmap.height());
    return (pred_norm - gt_target_norm).norm();
}

}  // namespace gaze3d::supervision
