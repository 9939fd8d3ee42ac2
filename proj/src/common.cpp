// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/common.hpp>

#include <iostream>

namespace gaze3d {

void emit_warning(Warnings* sink, const std::string& msg) {
    if (sink != nullptr) {
        sink->add(msg);
    } else {
        std::cerr << "[warn] " << msg << "\n";
    }
}

}  // namespace gaze3d
