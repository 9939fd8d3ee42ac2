// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gaze3d/common.hpp>

#include <vector>

namespace gaze3d::geometry {

/// Pinhole camera parameters. Pixel (u, v) with depth Z maps to
///   X = (u - cx) * Z / fx,  Y = (v - cy) * Z / fy.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const;
};

/// Depth map in meters. A pixel with value 0 is invalid (sensor dropout).
struct DepthMap {
    Grid values;

    int height() const { return values.height(); }
    int width() const { return values.width(); }
    double at(int row, int col) const { return values.at(row, col); }
    double& at(int row, int col) { return values.at(row, col); }
    bool valid(int row, int col) const { return values.at(row, col) > 0.0; }
};

/// Per-pixel 3D points in the camera frame. Invalid pixels carry (0,0,0).
struct PointCloud {
    int height = 0;
    int width = 0;
    std::vector<Vec3> points;          // row-major, height*width
    std::vector<std::uint8_t> valid;   // row-major, height*width

    const Vec3& at(int row, int col) const {
        return points[static_cast<std::size_t>(row) * width + col];
    }
    Vec3& at(int row, int col) {
        return points[static_cast<std::size_t>(row) * width + col];
    }
    bool is_valid(int row, int col) const {
        return valid[static_cast<std::size_t>(row) * width + col] != 0;
    }
    std::size_t valid_count() const;
};

/// Unit-norm 3D gaze direction.
struct GazeVector {
    Vec3 dir = Vec3(0, 0, 1);

    /// Normalizes v. Warns through `sink` when the input deviates from unit
    /// norm by more than 1e-6; throws GeometryError on (near-)zero input.
    static GazeVector normalized(const Vec3& v, Warnings* sink = nullptr);

    double dot(const Vec3& other) const { return dir.dot(other); }
};

/// The stereo field-of-view saliency pair. `v` holds the cosine between the
/// eye-to-point direction and the gaze; `v_hat = max(v, 0)^alpha`.
struct FovHeatmaps {
    Grid v;
    Grid v_hat;
};

/// Result of the evaluation-time 3D target retrieval.
struct Retrieval3D {
    GazeVector refined_gaze;
    Vec3 target_3d = Vec3::Zero();
    Vec2 target_2d = Vec2::Zero();  // (u, v) pixel of the selected cloud point
};

/// Unprojects a depth map into the camera frame. Zero-depth pixels are
/// masked invalid and carry the point (0,0,0).
PointCloud unproject(const DepthMap& depth, const CameraIntrinsics& k);

/// Projects a camera-frame point to pixel coordinates (u, v).
/// Throws GeometryError when point.z <= 0.
Vec2 project(const Vec3& point, const CameraIntrinsics& k);

inline constexpr double kDefaultFovAlpha = 3.0;

/// Computes the saliency pair (V, V-hat) over the cloud grid. Per valid
/// pixel, V is the cosine between the unit direction eye->point and the
/// gaze; invalid and eye-coincident pixels get V = 0. V-hat = max(V,0)^alpha.
FovHeatmaps compute_fov_heatmaps(const PointCloud& cloud, const Vec3& eye_3d,
                                 const GazeVector& gaze, double alpha = kDefaultFovAlpha,
                                 Warnings* sink = nullptr);

/// Grid coordinates of the largest heatmap cell; ties break to the first
/// maximum in row-major scan order. Returns (col, row).
Eigen::Vector2i argmax_cell(const Grid& heatmap);

/// Maps a cell index in a `from`-sized grid to the pixel-center aligned
/// index in a `to`-sized grid.
int rescale_index(int index, int from, int to);

inline constexpr int kDefaultRetrievalWindowRadius = 15;  // px at 224x224

/// Retrieves the 3D gaze target: takes the argmax of the predicted 64x64
/// heatmap, rescales it to the cloud grid, and searches the square window
/// around it for the valid point whose direction from the eye has maximum
/// cosine similarity with the gaze. Doubles the window until a valid
/// candidate is found; throws GeometryError when the cloud has none at all.
Retrieval3D retrieve_3d_target(const Grid& heatmap_h, const PointCloud& cloud,
                               const Vec3& eye_3d, const GazeVector& gaze,
                               int window_radius = kDefaultRetrievalWindowRadius);

}  // namespace gaze3d::geometry
