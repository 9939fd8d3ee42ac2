// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gaze3d::testsupport {

Vec3 oracle_unproject(double u, double v, double z, double fx, double fy, double cx, double cy) {
    return Vec3((u - cx) * z / fx, (v - cy) * z / fy, z);
}

Vec2 oracle_project(const Vec3& p, double fx, double fy, double cx, double cy) {
    return Vec2(fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy);
}

double oracle_fov_cos(const Vec3& point, const Vec3& eye, const Vec3& gaze_unit) {
    const double dx = point.x() - eye.x();
    const double dy = point.y() - eye.y();
    const double dz = point.z() - eye.z();
    const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
    return (dx * gaze_unit.x() + dy * gaze_unit.y() + dz * gaze_unit.z()) / n;
}

OracleRetrieval oracle_retrieve(const Grid& heatmap, const geometry::PointCloud& cloud,
                                const Vec3& eye, const Vec3& gaze_unit, int radius) {
    // Row-major first argmax of the heatmap.
    int best_r = 0, best_c = 0;
    double best_v = heatmap.at(0, 0);
    for (int r = 0; r < heatmap.height(); ++r) {
        for (int c = 0; c < heatmap.width(); ++c) {
            if (heatmap.at(r, c) > best_v) {
                best_v = heatmap.at(r, c);
                best_r = r;
                best_c = c;
            }
        }
    }

    auto rescale = [](int i, int from, int to) {
        const long mapped = std::lround((i + 0.5) * static_cast<double>(to) / from - 0.5);
        return static_cast<int>(std::clamp(mapped, 0L, static_cast<long>(to - 1)));
    };
    const int u0 = rescale(best_c, heatmap.width(), cloud.width);
    const int v0 = rescale(best_r, heatmap.height(), cloud.height);

    for (int r = radius;; r *= 2) {
        OracleRetrieval out;
        double best_cos = -2.0;
        for (int v = std::max(0, v0 - r); v <= std::min(cloud.height - 1, v0 + r); ++v) {
            for (int u = std::max(0, u0 - r); u <= std::min(cloud.width - 1, u0 + r); ++u) {
                if (!cloud.is_valid(v, u)) continue;
                const double c = oracle_fov_cos(cloud.at(v, u), eye, gaze_unit);
                if (c > best_cos) {
                    best_cos = c;
                    out.found = true;
                    out.point = cloud.at(v, u);
                    out.u = u;
                    out.v = v;
                }
            }
        }
        const bool covers_all = (v0 - r <= 0 && v0 + r >= cloud.height - 1 && u0 - r <= 0 &&
                                 u0 + r >= cloud.width - 1);
        if (out.found || covers_all) return out;
    }
}

double oracle_auc_roc(const std::vector<double>& scores, std::size_t positive_index) {
    const double pos = scores[positive_index];
    const std::size_t n_neg = scores.size() - 1;

    std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());

    double area = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    for (double t : thresholds) {
        std::size_t fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (i != positive_index && scores[i] >= t) ++fp;
        }
        const double tpr = pos >= t ? 1.0 : 0.0;
        const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    return area;
}

FdCheckResult fd_check(const std::function<double()>& loss, nn::Tensor& value,
                       const nn::Tensor& grad, const std::vector<std::size_t>& indices,
                       double step) {
    FdCheckResult result;
    for (std::size_t idx : indices) {
        const double orig = value[idx];
        const double h = step * std::max(1.0, std::abs(orig));
        value[idx] = orig + h;
        const double fp = loss();
        value[idx] = orig - h;
        const double fm = loss();
        value[idx] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = grad[idx];
        ++result.checked;
        if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;
        const double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
        result.max_rel_err = std::max(result.max_rel_err, rel);
    }
    return result;
}

SyntheticScene make_random_scene(nn::Rng& rng, int width, int height, double dropout_fraction) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SyntheticScene scene;

    auto& k = scene.intrinsics;
    k.width = width;
    k.height = height;
    k.fx = width * (0.8 + 0.5 * uni(rng));
    k.fy = k.fx;
    k.cx = (width - 1) / 2.0 + 4.0 * (uni(rng) - 0.5);
    k.cy = (height - 1) / 2.0 + 4.0 * (uni(rng) - 0.5);

    const double floor_y = 0.8 + 0.7 * uni(rng);
    const double wall_z = 2.5 + 2.0 * uni(rng);

    scene.depth.values = Grid(height, width);
    scene.cloud.height = height;
    scene.cloud.width = width;
    scene.cloud.points.assign(static_cast<std::size_t>(height) * width, Vec3::Zero());
    scene.cloud.valid.assign(static_cast<std::size_t>(height) * width, 0);

    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const double dy = (v - k.cy) / k.fy;
            double z = wall_z;
            if (dy > 1e-9) z = std::min(z, floor_y / dy);
            if (uni(rng) < dropout_fraction) z = 0.0;
            scene.depth.at(v, u) = z;
            if (z > 0.0) {
                scene.cloud.at(v, u) = oracle_unproject(u, v, z, k.fx, k.fy, k.cx, k.cy);
                scene.cloud.valid[static_cast<std::size_t>(v) * width + u] = 1;
            }
        }
    }

    scene.eye = Vec3(0.6 * (uni(rng) - 0.5), -0.2 + 0.5 * uni(rng), 0.8 + 0.8 * uni(rng));

    std::uniform_int_distribution<int> du(2, width - 3);
    std::uniform_int_distribution<int> dv(2, height - 3);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const int u = du(rng);
        const int v = dv(rng);
        if (!scene.cloud.is_valid(v, u)) continue;
        const Vec3 d = scene.cloud.at(v, u) - scene.eye;
        if (d.norm() < 0.1) continue;
        scene.target_u = u;
        scene.target_v = v;
        scene.gaze = d / d.norm();
        return scene;
    }
    // With 5% dropout a valid target pixel is always found long before the
    // attempt cap; reaching it means the generator parameters are broken.
    throw std::runtime_error("make_random_scene: no valid target pixel");
}

}  // namespace gaze3d::testsupport
