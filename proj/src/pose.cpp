// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/pose.hpp>

#include <cmath>

namespace gaze3d::pose {

const std::array<std::string_view, kFullBodyJointCount>& joint_names() {
    static const std::array<std::string_view, kFullBodyJointCount> names = {
        "nose",          "left_eye",    "right_eye",  "left_ear",    "right_ear",
        "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
        "right_wrist",   "left_hip",    "right_hip",  "left_knee",   "right_knee",
        "left_ankle",    "right_ankle"};
    return names;
}

void Keypoints2D::validate() const {
    if (!confidence.empty() && confidence.size() != joints.size()) {
        throw PoseError("keypoints: confidence length does not match joint count");
    }
    for (const auto& j : joints) {
        if (!std::isfinite(j.x()) || !std::isfinite(j.y())) {
            throw PoseError("keypoints: non-finite coordinate");
        }
    }
    for (double c : confidence) {
        if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
            throw PoseError("keypoints: confidence outside [0, 1]");
        }
    }
}

Keypoints2D select_upper_body(const Keypoints2D& full) {
    full.validate();
    if (full.count() == kUpperBodyJointCount) {
        return full;
    }
    if (full.count() != kFullBodyJointCount) {
        throw PoseError("select_upper_body: expected 17- or 13-joint layout, got " +
                        std::to_string(full.count()) + " joints");
    }
    Keypoints2D upper;
    upper.joints.assign(full.joints.begin(), full.joints.begin() + kUpperBodyJointCount);
    if (!full.confidence.empty()) {
        upper.confidence.assign(full.confidence.begin(),
                                full.confidence.begin() + kUpperBodyJointCount);
    }
    return upper;
}

NormalizedPose normalize_keypoints(const Keypoints2D& keypoints) {
    keypoints.validate();
    if (keypoints.count() != kUpperBodyJointCount && keypoints.count() != kFullBodyJointCount) {
        throw PoseError("normalize_keypoints: expected 13 or 17 joints, got " +
                        std::to_string(keypoints.count()));
    }

    const Vec2 neck = 0.5 * (keypoints.joints[kLeftShoulder] + keypoints.joints[kRightShoulder]);
    const Vec2 mid_hip = 0.5 * (keypoints.joints[kLeftHip] + keypoints.joints[kRightHip]);
    const double scale = (neck - mid_hip).norm();
    if (scale < kDegenerateScaleEps) {
        throw PoseError("normalize_keypoints: degenerate pose, neck-hip distance " +
                        std::to_string(scale) + " px");
    }

    NormalizedPose out;
    out.anchor = neck;
    out.scale = scale;
    out.joints.reserve(keypoints.joints.size());
    for (const auto& j : keypoints.joints) {
        out.joints.push_back((j - neck) / scale);
    }
    return out;
}

std::vector<double> NormalizedPose::flattened() const {
    std::vector<double> flat;
    flat.reserve(joints.size() * 2);
    for (const auto& j : joints) {
        flat.push_back(j.x());
        flat.push_back(j.y());
    }
    return flat;
}

}  // namespace gaze3d::pose
