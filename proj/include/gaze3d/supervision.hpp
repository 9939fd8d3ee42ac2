// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gaze3d/common.hpp>
#include <gaze3d/geometry.hpp>

#include <string>

namespace gaze3d::supervision {

/// Weights of the combined training loss w_heat * L_heat + w_gaze * L_gaze.
struct LossWeights {
    double w_heat = 10000.0;
    double w_gaze = 10.0;

    void validate() const {
        if (w_heat < 0.0 || w_gaze < 0.0) {
            throw ConfigError("loss weights must be non-negative");
        }
    }
};

/// The four evaluation metrics, aggregated or per-sample.
struct MetricReport {
    double dist_3d = 0.0;      // meters
    double angle_error = 0.0;  // degrees
    double auc = 0.0;          // [0, 1]
    double dist_2d = 0.0;      // [0, 1] normalized image space

    /// One flat key-value record: "dist_3d=... angle_error=... auc=... dist_2d=...".
    std::string to_record() const;
};

/// Cosine loss 1 - <gt, pred>, range [0, 2]. Non-unit inputs are
/// normalized internally (warning contract).
double gaze_loss(const Vec3& gt, const Vec3& pred, Warnings* sink = nullptr);

/// Mean squared error over all heatmap cells.
double heatmap_loss(const Grid& pred, const Grid& gt);

/// w.w_heat * l_heat + w.w_gaze * l_gaze.
double total_loss(double l_heat, double l_gaze, const LossWeights& w);

inline constexpr double kDefaultHeatmapSigma = 3.0;  // px on the 64x64 grid
inline constexpr int kHeatmapSize = 64;

/// Gaussian ground-truth heatmap. The target is rounded to the nearest
/// cell so the peak value is exactly 1; out-of-grid targets are clamped to
/// the border with a warning.
Grid gaussian_gt_heatmap(const Vec2& target_cell_xy, double sigma = kDefaultHeatmapSigma,
                         int size = kHeatmapSize, Warnings* sink = nullptr);

/// Euclidean distance in meters.
double metric_dist3d(const Vec3& pred, const Vec3& gt);

/// Angle between the two directions in degrees, in [0, 180]. Inputs are
/// normalized internally; the cosine is clamped to [-1, 1] before arccos.
/// Throws GeometryError on zero-norm input.
double metric_angle_deg(const Vec3& gt, const Vec3& pred);

/// Bilinear resize with pixel-center alignment (src = (dst+0.5)*scale-0.5).
Grid resize_bilinear(const Grid& src, int out_height, int out_width);

/// ROC AUC with the single ground-truth pixel as the positive set, computed
/// as the normalized rank of its score among all other pixels (ties count
/// half). The heatmap is bilinearly resized to the scene resolution first.
double metric_auc(const Grid& pred_heatmap, int gt_u, int gt_v, int scene_width,
                  int scene_height);

/// Distance between the argmax cell center (normalized to a 1x1 image) and
/// the normalized ground-truth target.
double metric_dist2d(const Grid& pred_heatmap, const Vec2& gt_target_norm);

}  // namespace gaze3d::supervision
