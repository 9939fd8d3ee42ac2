// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gaze3d/common.hpp>

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace gaze3d::pose {

/// Joint indices of the 17-joint full-body layout.
enum FullBodyJoint : int {
    kNose = 0,
    kLeftEye = 1,
    kRightEye = 2,
    kLeftEar = 3,
    kRightEar = 4,
    kLeftShoulder = 5,
    kRightShoulder = 6,
    kLeftElbow = 7,
    kRightElbow = 8,
    kLeftWrist = 9,
    kRightWrist = 10,
    kLeftHip = 11,
    kRightHip = 12,
    kLeftKnee = 13,
    kRightKnee = 14,
    kLeftAnkle = 15,
    kRightAnkle = 16,
};

inline constexpr int kFullBodyJointCount = 17;
/// The upper-body subset is the first 13 joints of the full layout:
/// nose, L/R eye, L/R ear, L/R shoulder, L/R elbow, L/R wrist, L/R hip.
inline constexpr int kUpperBodyJointCount = 13;

const std::array<std::string_view, kFullBodyJointCount>& joint_names();

/// Ordered 2D keypoints in pixel coordinates with optional per-joint
/// confidence scores in [0, 1].
struct Keypoints2D {
    std::vector<Vec2> joints;
    std::vector<double> confidence;  // empty, or same length as joints

    int count() const { return static_cast<int>(joints.size()); }
    void validate() const;
};

/// Neck-anchored, scale-normalized pose. The neck (shoulder midpoint) maps
/// to (0,0) and the neck-to-mid-hip distance maps to 1.
struct NormalizedPose {
    std::vector<Vec2> joints;
    Vec2 anchor = Vec2::Zero();  // neck position in the input frame (pixels)
    double scale = 0.0;          // neck to mid-hip distance (pixels)

    int count() const { return static_cast<int>(joints.size()); }
    /// Flattens to [x0, y0, x1, y1, ...], the network input layout.
    std::vector<double> flattened() const;
};

/// Keeps the 13 joints from the hips upward; drops knees and ankles.
/// A 13-joint input is returned unchanged. Any other size is a layout error.
Keypoints2D select_upper_body(const Keypoints2D& full);

/// Normalizes keypoints by the neck anchor (shoulder midpoint) and the
/// neck-to-mid-hip distance. Accepts 13- or 17-joint layouts; shoulders and
/// hips sit at the same indices in both. Throws PoseError when the pose is
/// collapsed (anchor distance below 1e-6 px).
NormalizedPose normalize_keypoints(const Keypoints2D& keypoints);

inline constexpr double kDegenerateScaleEps = 1e-6;

}  // namespace gaze3d::pose
