// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace gaze3d::geometry {

namespace {
constexpr double kEyeCoincidentEps = 1e-9;   // meters
constexpr double kUnitNormTolerance = 1e-6;
}  // namespace

void CameraIntrinsics::validate() const {
    if (fx <= 0.0 || fy <= 0.0) {
        throw ShapeError("intrinsics: focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw ShapeError("intrinsics: image dimensions must be positive");
    }
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
        throw ShapeError("intrinsics: principal point outside image bounds");
    }
}

std::size_t PointCloud::valid_count() const {
    std::size_t n = 0;
    for (auto f : valid) n += (f != 0);
    return n;
}

GazeVector GazeVector::normalized(const Vec3& v, Warnings* sink) {
    const double norm = v.norm();
    if (norm < kEyeCoincidentEps) {
        throw GeometryError("gaze vector has (near-)zero norm, direction undefined");
    }
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        emit_warning(sink, "gaze vector not unit-norm (|v| = " + std::to_string(norm) +
                               "), normalizing");
    }
    return GazeVector{v / norm};
}

PointCloud unproject(const DepthMap& depth, const CameraIntrinsics& k) {
    k.validate();
    if (depth.height() != k.height || depth.width() != k.width) {
        throw ShapeError("unproject: depth map is " + std::to_string(depth.width()) + "x" +
                         std::to_string(depth.height()) + " but intrinsics expect " +
                         std::to_string(k.width) + "x" + std::to_string(k.height));
    }

    PointCloud cloud;
    cloud.height = depth.height();
    cloud.width = depth.width();
    cloud.points.assign(static_cast<std::size_t>(cloud.height) * cloud.width, Vec3::Zero());
    cloud.valid.assign(cloud.points.size(), 0);

    for (int v = 0; v < cloud.height; ++v) {
        for (int u = 0; u < cloud.width; ++u) {
            const double z = depth.at(v, u);
            if (z <= 0.0) continue;
            const std::size_t idx = static_cast<std::size_t>(v) * cloud.width + u;
            cloud.points[idx] = Vec3((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
            cloud.valid[idx] = 1;
        }
    }
    return cloud;
}

Vec2 project(const Vec3& point, const CameraIntrinsics& k) {
    if (point.z() <= 0.0) {
        throw GeometryError("project: point is behind the camera (z = " +
                            std::to_string(point.z()) + ")");
    }
    return Vec2(k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy);
}

FovHeatmaps compute_fov_heatmaps(const PointCloud& cloud, const Vec3& eye_3d,
                                 const GazeVector& gaze, double alpha, Warnings* sink) {
    if (alpha <= 0.0) {
        throw std::invalid_argument("compute_fov_heatmaps: alpha must be positive");
    }
    const GazeVector g = GazeVector::normalized(gaze.dir, sink);

    FovHeatmaps out;
    out.v = Grid(cloud.height, cloud.width, 0.0);
    out.v_hat = Grid(cloud.height, cloud.width, 0.0);

    for (int r = 0; r < cloud.height; ++r) {
        for (int c = 0; c < cloud.width; ++c) {
            if (!cloud.is_valid(r, c)) continue;
            const Vec3 d = cloud.at(r, c) - eye_3d;
            const double norm = d.norm();
            if (norm < kEyeCoincidentEps) continue;  // eye-coincident point, V stays 0
            const double v = g.dot(d) / norm;
            out.v.at(r, c) = v;
            if (v > 0.0) out.v_hat.at(r, c) = std::pow(v, alpha);
        }
    }
    return out;
}

Eigen::Vector2i argmax_cell(const Grid& heatmap) {
    int best_r = 0, best_c = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < heatmap.height(); ++r) {
        for (int c = 0; c < heatmap.width(); ++c) {
            if (heatmap.at(r, c) > best) {
                best = heatmap.at(r, c);
                best_r = r;
                best_c = c;
            }
        }
    }
    return Eigen::Vector2i(best_c, best_r);
}

int rescale_index(int index, int from, int to) {
    const double scaled = (index + 0.5) * static_cast<double>(to) / from - 0.5;
    const int rounded = static_cast<int>(std::lround(scaled));
    return std::clamp(rounded, 0, to - 1);
}

Retrieval3D retrieve_3d_target(const Grid& heatmap_h, const PointCloud& cloud,
                               const Vec3& eye_3d, const GazeVector& gaze, int window_radius) {
    if (window_radius <= 0) {
        throw std::invalid_argument("retrieve_3d_target: window radius must be positive");
    }
    for (int i = 0; i < heatmap_h.height(); ++i) {
        for (int j = 0; j < heatmap_h.width(); ++j) {
            const double h = heatmap_h.at(i, j);
            if (!std::isfinite(h) || h < 0.0) {
                throw std::invalid_argument("retrieve_3d_target: heatmap must be finite and non-negative");
            }
        }
    }
    if (cloud.valid_count() == 0) {
        throw GeometryError("retrieve_3d_target: point cloud has no valid points");
    }

    const Eigen::Vector2i peak = argmax_cell(heatmap_h);
    const int cu = rescale_index(peak.x(), heatmap_h.width(), cloud.width);
    const int cv = rescale_index(peak.y(), heatmap_h.height(), cloud.height);

    const int max_dim = std::max(cloud.width, cloud.height);
    int radius = window_radius;
    while (true) {
        const int u0 = std::max(0, cu - radius);
        const int u1 = std::min(cloud.width - 1, cu + radius);
        const int v0 = std::max(0, cv - radius);
        const int v1 = std::min(cloud.height - 1, cv + radius);

        double best_cos = -std::numeric_limits<double>::infinity();
        int best_u = -1, best_v = -1;
        for (int v = v0; v <= v1; ++v) {
            for (int u = u0; u <= u1; ++u) {
                if (!cloud.is_valid(v, u)) continue;
                const Vec3 d = cloud.at(v, u) - eye_3d;
                const double norm = d.norm();
                if (norm < kEyeCoincidentEps) continue;
                const double cos_sim = gaze.dot(d) / norm;
                if (cos_sim > best_cos) {
                    best_cos = cos_sim;
                    best_u = u;
                    best_v = v;
                }
            }
        }

        if (best_u >= 0) {
            Retrieval3D out;
            out.target_3d = cloud.at(best_v, best_u);
            out.target_2d = Vec2(best_u, best_v);
            out.refined_gaze = GazeVector{(out.target_3d - eye_3d).normalized()};
            return out;
        }
        if (u0 == 0 && v0 == 0 && u1 == cloud.width - 1 && v1 == cloud.height - 1) {
            // Whole image covered; only eye-coincident valid points remain.
            throw GeometryError("retrieve_3d_target: no usable candidate in the cloud");
        }
        radius = std::min(radius * 2, max_dim);
    }
}

}  // namespace gaze3d::geometry
