// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic two-plane room generator. Every annotation is derived from the
// quantized depth raster that actually lands on disk, so the samples are
// exact oracles for the geometry pipeline.

#include <gaze3d/data.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include <opencv2/imgproc.hpp>

namespace gaze3d::data {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
    if (count < 0) throw ConfigError("synth: count must be non-negative");
    if (out_dir.empty()) throw ConfigError("synth: out_dir must be set");
    if (fx <= 0.0 || fy <= 0.0) throw ConfigError("synth: focal lengths must be positive");
    if (wall_z_min < 2.6 || wall_z_max < wall_z_min) {
        throw ConfigError("synth: wall distance range must satisfy 2.6 <= min <= max");
    }
    if (camera_height_min <= 0.0 || camera_height_max < camera_height_min) {
        throw ConfigError("synth: camera height range must be positive and ordered");
    }
    if (depth_dropout < 0.0 || depth_dropout > 0.5) {
        throw ConfigError("synth: depth_dropout must be in [0, 0.5]");
    }
    if (facing_noise_deg < 0.0 || facing_noise_deg > 45.0) {
        throw ConfigError("synth: facing_noise_deg must be in [0, 45]");
    }
}

namespace {

constexpr int kS = kSceneSize;

struct Room {
    double wall_z = 0.0;
    double floor_y = 0.0;  // camera height above the floor (y points down)
};

bool pixel_on_floor(const geometry::CameraIntrinsics& k, const Room& room, int u, int v) {
    const double dy = (v - k.cy) / k.fy;
    return dy > 1e-9 && room.floor_y / dy < room.wall_z;
}

/// Plane depth at one pixel, quantized to the millimeter grid of the PNG.
double quantized_depth(const geometry::CameraIntrinsics& k, const Room& room, int u, int v) {
    const double dy = (v - k.cy) / k.fy;
    double z = room.wall_z;
    if (dy > 1e-9) {
        z = std::min(z, room.floor_y / dy);
    }
    return std::lround(std::clamp(z * 1000.0, 0.0, 65535.0)) / 1000.0;
}

void draw_room(ImageU8& scene, const geometry::CameraIntrinsics& k, const Room& room) {
    for (int v = 0; v < kS; ++v) {
        for (int u = 0; u < kS; ++u) {
            if (pixel_on_floor(k, room, u, v)) {
                const int shade = (v * 40) / kS;
                scene.at(v, u, 0) = static_cast<std::uint8_t>(104 + shade);
                scene.at(v, u, 1) = static_cast<std::uint8_t>(88 + shade);
                scene.at(v, u, 2) = static_cast<std::uint8_t>(70 + shade);
            } else {
                const int shade = ((u + v) * 24) / (2 * kS);
                scene.at(v, u, 0) = static_cast<std::uint8_t>(160 + shade);
                scene.at(v, u, 1) = static_cast<std::uint8_t>(152 + shade);
                scene.at(v, u, 2) = static_cast<std::uint8_t>(142 + shade);
            }
        }
    }
}

struct Person {
    std::array<Vec3, pose::kFullBodyJointCount> joints;
    Vec3 head_center = Vec3::Zero();
    Vec3 eye_3d = Vec3::Zero();
    double head_radius = 0.0;
};

/// Places the skeleton so the head faces (target - head) plus angular noise;
/// the right arm points at the target as an extra pose cue.
Person build_person(double x_p, double z_p, double body_scale, const Room& room,
                    const Vec3& target, double yaw_noise, double pitch_noise) {
    using pose::FullBodyJoint;
    Person p;
    const double s = body_scale;
    const Vec3 mid_hip(x_p, room.floor_y - 0.95 * s, z_p);
    const Vec3 neck(x_p, room.floor_y - 1.45 * s, z_p);
    p.head_center = Vec3(x_p, room.floor_y - 1.62 * s, z_p);
    p.head_radius = 0.11 * s;

    const Vec3 look = (target - p.head_center).normalized();
    const double yaw = std::atan2(look.x(), look.z()) + yaw_noise;
    const double pitch =
        std::atan2(-look.y(), std::hypot(look.x(), look.z())) + pitch_noise;
    const Vec3 f(std::sin(yaw) * std::cos(pitch), -std::sin(pitch),
                 std::cos(yaw) * std::cos(pitch));
    // Person's left in the y-down camera frame; up x forward.
    const Vec3 left = Vec3(-f.z(), 0.0, f.x()).normalized();
    const Vec3 down(0.0, 1.0, 0.0);
    const double rh = p.head_radius;

    auto& j = p.joints;
    j[FullBodyJoint::kNose] = p.head_center + rh * f - 0.05 * rh * down;
    j[FullBodyJoint::kLeftEye] = p.head_center + rh * (0.80 * f + 0.38 * left) - 0.22 * rh * down;
    j[FullBodyJoint::kRightEye] = p.head_center + rh * (0.80 * f - 0.38 * left) - 0.22 * rh * down;
    j[FullBodyJoint::kLeftEar] = p.head_center + rh * (0.05 * f + 0.98 * left);
    j[FullBodyJoint::kRightEar] = p.head_center + rh * (0.05 * f - 0.98 * left);
    j[FullBodyJoint::kLeftShoulder] = neck + 0.21 * s * left;
    j[FullBodyJoint::kRightShoulder] = neck - 0.21 * s * left;
    j[FullBodyJoint::kLeftHip] = mid_hip + 0.14 * s * left;
    j[FullBodyJoint::kRightHip] = mid_hip - 0.14 * s * left;

    j[FullBodyJoint::kLeftElbow] = j[FullBodyJoint::kLeftShoulder] + 0.27 * s * down;
    j[FullBodyJoint::kLeftWrist] = j[FullBodyJoint::kLeftElbow] + 0.25 * s * down;
    const Vec3 reach = (target - j[FullBodyJoint::kRightShoulder]).normalized();
    j[FullBodyJoint::kRightElbow] =
        j[FullBodyJoint::kRightShoulder] + 0.30 * s * reach + 0.03 * s * down;
    j[FullBodyJoint::kRightWrist] = j[FullBodyJoint::kRightShoulder] + 0.55 * s * reach;

    j[FullBodyJoint::kLeftKnee] = j[FullBodyJoint::kLeftHip] + 0.42 * s * down;
    j[FullBodyJoint::kRightKnee] = j[FullBodyJoint::kRightHip] + 0.42 * s * down;
    j[FullBodyJoint::kLeftAnkle] = j[FullBodyJoint::kLeftKnee] + 0.44 * s * down;
    j[FullBodyJoint::kRightAnkle] = j[FullBodyJoint::kRightKnee] + 0.44 * s * down;

    p.eye_3d = 0.5 * (j[FullBodyJoint::kLeftEye] + j[FullBodyJoint::kRightEye]);
    return p;
}

void draw_person(ImageU8& scene, const pose::Keypoints2D& kp, const Person& person,
                 const geometry::CameraIntrinsics& k, const Rect& head_box, nn::Rng& rng) {
    using pose::FullBodyJoint;
    cv::Mat img(kS, kS, CV_8UC3, scene.data.data());
    auto px = [&](int joint) {
        return cv::Point(static_cast<int>(std::lround(kp.joints[joint].x())),
                         static_cast<int>(std::lround(kp.joints[joint].y())));
    };
    const cv::Scalar body(46, 58, 140);
    constexpr std::pair<int, int> kLimbs[] = {
        {FullBodyJoint::kLeftShoulder, FullBodyJoint::kRightShoulder},
        {FullBodyJoint::kLeftShoulder, FullBodyJoint::kLeftElbow},
        {FullBodyJoint::kLeftElbow, FullBodyJoint::kLeftWrist},
        {FullBodyJoint::kRightShoulder, FullBodyJoint::kRightElbow},
        {FullBodyJoint::kRightElbow, FullBodyJoint::kRightWrist},
        {FullBodyJoint::kLeftShoulder, FullBodyJoint::kLeftHip},
        {FullBodyJoint::kRightShoulder, FullBodyJoint::kRightHip},
        {FullBodyJoint::kLeftHip, FullBodyJoint::kRightHip},
        {FullBodyJoint::kLeftHip, FullBodyJoint::kLeftKnee},
        {FullBodyJoint::kLeftKnee, FullBodyJoint::kLeftAnkle},
        {FullBodyJoint::kRightHip, FullBodyJoint::kRightKnee},
        {FullBodyJoint::kRightKnee, FullBodyJoint::kRightAnkle},
    };
    for (const auto& [a, b] : kLimbs) {
        cv::line(img, px(a), px(b), body, 3, cv::LINE_8);
    }

    const Vec2 head_px = geometry::project(person.head_center, k);
    const int head_r = std::max(
        3, static_cast<int>(std::lround(person.head_radius * k.fx / person.head_center.z())));
    cv::circle(img, cv::Point(static_cast<int>(std::lround(head_px.x())),
                              static_cast<int>(std::lround(head_px.y()))),
               head_r, cv::Scalar(196, 156, 120), cv::FILLED, cv::LINE_8);

    // High-frequency face texture so the privacy blur has something to destroy.
    std::uniform_int_distribution<int> tone(40, 230);
    const int bw = head_box.width();
    const int bh = head_box.height();
    if (bw > 0 && bh > 0) {
        const int cells = 4;
        for (int by = 0; by < cells; ++by) {
            for (int bx = 0; bx < cells; ++bx) {
                const cv::Scalar c(tone(rng), tone(rng), tone(rng));
                const int x0 = head_box.x0 + bx * bw / cells;
                const int x1 = head_box.x0 + (bx + 1) * bw / cells;
                const int y0 = head_box.y0 + by * bh / cells;
                const int y1 = head_box.y0 + (by + 1) * bh / cells;
                cv::rectangle(img, cv::Point(x0, y0), cv::Point(x1 - 1, y1 - 1), c, cv::FILLED);
            }
        }
    }
}

}  // namespace

DatasetManifest synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    const fs::path out_dir = cfg.out_dir;

    nn::Rng rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    geometry::CameraIntrinsics k;
    k.fx = cfg.fx;
    k.fy = cfg.fy;
    k.cx = (kS - 1) / 2.0;
    k.cy = (kS - 1) / 2.0;
    k.width = kS;
    k.height = kS;

    DatasetManifest manifest;
    manifest.root = out_dir.string();
    manifest.split = cfg.split;

    for (int i = 0; i < cfg.count; ++i) {
        Room room;
        room.wall_z = cfg.wall_z_min + (cfg.wall_z_max - cfg.wall_z_min) * uni(rng);
        room.floor_y = cfg.camera_height_min +
                       (cfg.camera_height_max - cfg.camera_height_min) * uni(rng);

        geometry::DepthMap depth;
        depth.values = Grid(kS, kS, 0.0);
        for (int v = 0; v < kS; ++v) {
            for (int u = 0; u < kS; ++u) {
                depth.at(v, u) = quantized_depth(k, room, u, v);
            }
        }

        const double body_scale = 0.92 + 0.16 * uni(rng);
        const double z_p = 1.6 + (room.wall_z - 0.9 - 1.6) * uni(rng);
        const double x_p = (2.0 * uni(rng) - 1.0) * 0.22 * z_p;
        const Vec3 head_center(x_p, room.floor_y - 1.62 * body_scale, z_p);

        // Target pixel on a room surface, in front of the person and away
        // from the head; infeasible draws are resampled.
        constexpr int kMargin = 6;
        std::uniform_int_distribution<int> pick(kMargin, kS - 1 - kMargin);
        int u_t = 0;
        int v_t = 0;
        Vec3 target = Vec3::Zero();
        for (int attempt = 0; attempt < 200; ++attempt) {
            u_t = pick(rng);
            v_t = pick(rng);
            const double z = depth.at(v_t, u_t);
            // Same pinhole expression the unprojection uses, so the stored
            // annotation matches the loaded point cloud exactly.
            target = Vec3((u_t - k.cx) * z / k.fx, (v_t - k.cy) * z / k.fy, z);
            const bool in_front = target.z() > z_p - 0.5 || attempt >= 150;
            if (z > 0.0 && in_front && (target - head_center).norm() > 0.8) {
                break;
            }
        }

        const double noise_sigma = cfg.facing_noise_deg * std::numbers::pi / 180.0;
        const double yaw_noise = std::clamp(gauss(rng) * noise_sigma, -2 * noise_sigma,
                                            2 * noise_sigma);
        const double pitch_noise = std::clamp(gauss(rng) * 0.6 * noise_sigma, -noise_sigma,
                                              noise_sigma);
        const Person person =
            build_person(x_p, z_p, body_scale, room, target, yaw_noise, pitch_noise);

        pose::Keypoints2D kp;
        kp.joints.reserve(pose::kFullBodyJointCount);
        kp.confidence.assign(pose::kFullBodyJointCount, 1.0);
        for (const Vec3& joint : person.joints) {
            kp.joints.push_back(geometry::project(joint, k));
        }

        double bx0 = kS;
        double bx1 = 0.0;
        double by0 = kS;
        double by1 = 0.0;
        for (int jidx = pose::kNose; jidx <= pose::kRightEar; ++jidx) {
            bx0 = std::min(bx0, kp.joints[jidx].x());
            bx1 = std::max(bx1, kp.joints[jidx].x());
            by0 = std::min(by0, kp.joints[jidx].y());
            by1 = std::max(by1, kp.joints[jidx].y());
        }
        const double pad = 0.45 * std::max({bx1 - bx0, by1 - by0, 8.0});
        Rect head_box;
        head_box.x0 = std::clamp(static_cast<int>(std::floor(bx0 - pad)), 0, kS);
        head_box.x1 = std::clamp(static_cast<int>(std::ceil(bx1 + pad)) + 1, 0, kS);
        head_box.y0 = std::clamp(static_cast<int>(std::floor(by0 - pad)), 0, kS);
        head_box.y1 = std::clamp(static_cast<int>(std::ceil(by1 + pad)) + 1, 0, kS);

        ImageU8 scene(kS, kS, 3);
        draw_room(scene, k, room);
        draw_person(scene, kp, person, k, head_box, rng);

        // Sensor dropout, sparing the target so the annotation stays valid.
        if (cfg.depth_dropout > 0.0) {
            for (int v = 0; v < kS; ++v) {
                for (int u = 0; u < kS; ++u) {
                    if ((u != u_t || v != v_t) && uni(rng) < cfg.depth_dropout) {
                        depth.at(v, u) = 0.0;
                    }
                }
            }
        }

        char name[64];
        std::snprintf(name, sizeof(name), "scene_%04d.png", i);
        const std::string scene_name = name;
        std::snprintf(name, sizeof(name), "depth_%04d.png", i);
        const std::string depth_name = name;
        std::snprintf(name, sizeof(name), "keypoints_%04d.txt", i);
        const std::string keypoints_name = name;

        write_scene_png((out_dir / scene_name).string(), scene);
        write_depth_png((out_dir / depth_name).string(), depth);
        write_keypoints_txt((out_dir / keypoints_name).string(), kp);

        ManifestRecord rec;
        rec.scene_path = scene_name;
        rec.depth_path = depth_name;
        rec.keypoints_path = keypoints_name;
        rec.intrinsics = k;
        rec.head_box = head_box;
        rec.eye_2d = geometry::project(person.eye_3d, k);
        rec.eye_3d = person.eye_3d;
        rec.gaze = (target - person.eye_3d).normalized();
        rec.target_2d = {(u_t + 0.5) / kS, (v_t + 0.5) / kS};
        rec.target_3d = target;
        manifest.records.push_back(std::move(rec));
    }

    const std::string manifest_path = (out_dir / "manifest.jsonl").string();
    save_manifest(manifest, manifest_path);
    // Round-trip through the loader so every generated record passes the
    // same validation real data would.
    return load_manifest(manifest_path);
}

}  // namespace gaze3d::data
