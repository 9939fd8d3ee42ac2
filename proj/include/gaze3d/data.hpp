// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0
//
// Dataset plumbing: sample container, raster I/O, the manifest format,
// privacy blurring, augmentation, synthetic scene generation, and the
// tensor packing used by the training loops.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <gaze3d/common.hpp>
#include <gaze3d/geometry.hpp>
#include <gaze3d/nn/tensor.hpp>
#include <gaze3d/pose.hpp>

namespace gaze3d::data {

/// Side length of every scene, depth map, and head mask in the pipeline.
/// The heatmap decoder geometry is tied to this input size.
inline constexpr int kSceneSize = 224;

// ------------------------------------------------------------------ sample

/// One annotated observation: scene image, aligned depth, the subject's
/// keypoints, the face region, and the gaze ground truth.
struct GazeSample {
    ImageU8 scene;                          // RGB
    geometry::DepthMap depth;               // meters, 0 marks invalid pixels
    geometry::CameraIntrinsics intrinsics;
    pose::Keypoints2D keypoints;            // 13 or 17 joints, scene pixels
    Rect head_box;                          // scene pixels
    Grid head_mask;                         // kSceneSize x kSceneSize, {0,1}
    Vec2 eye_2d = Vec2::Zero();             // scene pixels
    Vec3 eye_3d = Vec3::Zero();             // camera frame, meters
    geometry::GazeVector gt_gaze;           // unit direction
    Vec2 gt_target_2d = Vec2::Zero();       // normalized [0,1]^2
    Vec3 gt_target_3d = Vec3::Zero();       // camera frame, meters

    /// Throws DataError naming the violated field: unit gaze, eye in front
    /// of the camera, head box inside the image, target_2d in [0,1]^2,
    /// matching scene/depth sizes, and a 13- or 17-joint pose.
    void validate() const;
};

/// Renders the head box interior as a binary kSceneSize^2 mask.
Grid render_head_mask(const Rect& head_box, int scene_width, int scene_height);

// ------------------------------------------------------------------ rasters

void write_scene_png(const std::string& path, const ImageU8& scene);
ImageU8 read_scene_png(const std::string& path);

/// Depth is stored as 16-bit PNG in millimeters and converted to meters on
/// load; zero stays the invalid marker in both units.
void write_depth_png(const std::string& path, const geometry::DepthMap& depth);
geometry::DepthMap read_depth_png(const std::string& path);

/// Keypoint files hold one "x y confidence" line per joint in the
/// documented 13- or 17-joint order.
void write_keypoints_txt(const std::string& path, const pose::Keypoints2D& keypoints);
pose::Keypoints2D read_keypoints_txt(const std::string& path);

// ------------------------------------------------------------------ manifest

inline constexpr const char* kManifestSchema = "gaze3d-manifest/1";

struct ManifestRecord {
    std::string scene_path;      // relative to the manifest directory
    std::string depth_path;
    std::string keypoints_path;
    geometry::CameraIntrinsics intrinsics;
    Rect head_box;
    Vec2 eye_2d = Vec2::Zero();
    Vec3 eye_3d = Vec3::Zero();
    Vec3 gaze = Vec3::Zero();
    Vec2 target_2d = Vec2::Zero();
    Vec3 target_3d = Vec3::Zero();
};

struct DatasetManifest {
    std::string root;            // directory the relative paths resolve against
    std::string split;           // train / val / test tag
    std::vector<ManifestRecord> records;

    std::size_t size() const { return records.size(); }
};

/// Line-delimited JSON: a header object carrying the schema tag and split,
/// then one record object per line. Load verifies the schema version, that
/// every referenced file exists, and the per-record annotation invariants;
/// violations raise DataError naming the record and field.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

/// Converter stub for the original dataset release layout, which is not
/// documented here. Always throws DataError.
DatasetManifest convert_release_layout(const std::string& root);

/// Loads one record into a fully populated, validated GazeSample. With
/// blur_faces on (the default privacy mode) the face region is blurred
/// before the sample leaves this module.
GazeSample load_sample(const DatasetManifest& manifest, std::size_t index,
                       bool blur_faces = true);

// ------------------------------------------------------------------ privacy

/// Gaussian-blurs the head box interior (sigma = max(box_w, box_h) / 8,
/// kernel truncated at 3 sigma, reflective padding at the box edges).
/// Pixels outside the box are bit-identical to the input. A degenerate box
/// is a no-op with a warning.
ImageU8 blur_face(const ImageU8& scene, const Rect& head_box, Warnings* sink = nullptr);

struct BlurAudit {
    bool exterior_identical = false;
    bool interior_changed = false;
};

/// Compares an original/blurred pair over the head box.
BlurAudit audit_blur(const ImageU8& original, const ImageU8& blurred, const Rect& head_box);

// ------------------------------------------------------------------ augment

/// Mirrors the sample about the vertical image axis: scene, depth, mask,
/// boxes and 2D coordinates flip; left/right joints swap; the x components
/// of eye_3d, gt_target_3d, and gt_gaze negate; cx mirrors so projection
/// consistency is preserved. Applying it twice is the identity.
GazeSample flip_horizontal(const GazeSample& sample);

/// Random crop (resampled up to 10 times if it would exclude the target or
/// the eye, then skipped), random horizontal flip, and photometric jitter
/// on the scene only. Deterministic under the seed; the result satisfies
/// every GazeSample invariant.
GazeSample augment(const GazeSample& sample, std::uint64_t seed);

// ------------------------------------------------------------------ tensors

/// Packs normalized poses into an (N, 26) or (N, 34) batch. The default
/// selects the 13 upper-body joints; use_full_body keeps all 17.
nn::Tensor pose_input(const std::vector<GazeSample>& samples, bool use_full_body);

/// Packs depth (meters) into (N, 1, size, size) by pixel-center nearest
/// resampling; invalid zeros stay zero.
nn::Tensor depth_input(const std::vector<GazeSample>& samples, int size);

/// Packs the six heatmap-network channels [R, G, B, mask, V, V_hat] into
/// (N, 6, kSceneSize, kSceneSize); RGB is scaled to [0, 1].
nn::Tensor heatmap_input(const std::vector<GazeSample>& samples,
                         const std::vector<geometry::FovHeatmaps>& fov);

// ------------------------------------------------------------------ synthetic

/// Generator configuration for the two-plane room scenes.
struct SynthConfig {
    int count = 64;
    std::string out_dir;
    std::string split = "train";
    double fx = 200.0;
    double fy = 200.0;
    double wall_z_min = 3.0;            // back wall distance range, meters
    double wall_z_max = 4.2;
    double camera_height_min = 1.1;     // camera height above the floor
    double camera_height_max = 1.6;
    double depth_dropout = 0.03;        // fraction of depth pixels zeroed
    double facing_noise_deg = 8.0;      // head orientation jitter around the gaze

    void validate() const;              // throws ConfigError naming the field
};

/// Renders `count` samples into cfg.out_dir (scene PNG, 16-bit depth PNG,
/// keypoint text file each) and returns the manifest, which is also written
/// to out_dir/manifest.jsonl. Every sample is consistent by construction:
/// the annotated 3D target equals the unprojection of the stored depth at
/// the target pixel, and gt_gaze is the exact unit vector from eye_3d to
/// the target. Fixed seeds give byte-identical outputs.
DatasetManifest synth_generate(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace gaze3d::data
