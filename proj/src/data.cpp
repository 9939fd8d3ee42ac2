// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/data.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace gaze3d::data {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------------ sample

void GazeSample::validate() const {
    const double gaze_norm = gt_gaze.dir.norm();
    if (std::abs(gaze_norm - 1.0) > 1e-6) {
        throw DataError("sample: gt_gaze: norm " + std::to_string(gaze_norm) +
                        " is not unit");
    }
    if (!(eye_3d.z() > 0.0)) {
        throw DataError("sample: eye_3d: z must be positive (in front of the camera)");
    }
    if (head_box.x0 < 0 || head_box.y0 < 0 || head_box.x1 > scene.width ||
        head_box.y1 > scene.height || head_box.x0 > head_box.x1 ||
        head_box.y0 > head_box.y1) {
        throw DataError("sample: head_box: outside image bounds");
    }
    for (int i = 0; i < 2; ++i) {
        if (!(gt_target_2d[i] >= 0.0 && gt_target_2d[i] <= 1.0)) {
            throw DataError("sample: gt_target_2d: outside [0,1]^2");
        }
    }
    if (depth.width() != scene.width || depth.height() != scene.height) {
        throw DataError("sample: depth: size does not match the scene");
    }
    if (scene.channels != 3) {
        throw DataError("sample: scene: expected 3 channels");
    }
    intrinsics.validate();
    if (intrinsics.width != scene.width || intrinsics.height != scene.height) {
        throw DataError("sample: intrinsics: size does not match the scene");
    }
    if (head_mask.height() != kSceneSize || head_mask.width() != kSceneSize) {
        throw DataError("sample: head_mask: expected " + std::to_string(kSceneSize) +
                        "x" + std::to_string(kSceneSize));
    }
    keypoints.validate();
    if (keypoints.count() != pose::kUpperBodyJointCount &&
        keypoints.count() != pose::kFullBodyJointCount) {
        throw DataError("sample: keypoints: expected 13 or 17 joints, got " +
                        std::to_string(keypoints.count()));
    }
}

Grid render_head_mask(const Rect& head_box, int scene_width, int scene_height) {
    Grid mask(kSceneSize, kSceneSize, 0.0);
    if (head_box.empty()) {
        return mask;
    }
    // Box corners are grid lines; scale them to the mask resolution.
    const double sx = static_cast<double>(kSceneSize) / scene_width;
    const double sy = static_cast<double>(kSceneSize) / scene_height;
    const int x0 = std::clamp(static_cast<int>(std::lround(head_box.x0 * sx)), 0, kSceneSize);
    const int x1 = std::clamp(static_cast<int>(std::lround(head_box.x1 * sx)), 0, kSceneSize);
    const int y0 = std::clamp(static_cast<int>(std::lround(head_box.y0 * sy)), 0, kSceneSize);
    const int y1 = std::clamp(static_cast<int>(std::lround(head_box.y1 * sy)), 0, kSceneSize);
    for (int r = y0; r < y1; ++r) {
        for (int c = x0; c < x1; ++c) {
            mask.at(r, c) = 1.0;
        }
    }
    return mask;
}

// ------------------------------------------------------------------ rasters

void write_scene_png(const std::string& path, const ImageU8& scene) {
    if (scene.channels != 3 || scene.width <= 0 || scene.height <= 0) {
        throw DataError("write_scene_png: expected a non-empty RGB image");
    }
    cv::Mat rgb(scene.height, scene.width, CV_8UC3,
                const_cast<std::uint8_t*>(scene.data.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path, bgr)) {
        throw DataError("write_scene_png: cannot write " + path);
    }
}

ImageU8 read_scene_png(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw DataError("read_scene_png: cannot read " + path);
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    ImageU8 out(rgb.rows, rgb.cols, 3);
    for (int r = 0; r < rgb.rows; ++r) {
        std::copy_n(rgb.ptr<std::uint8_t>(r), static_cast<std::size_t>(rgb.cols) * 3,
                    out.data.begin() + static_cast<std::size_t>(r) * rgb.cols * 3);
    }
    return out;
}

void write_depth_png(const std::string& path, const geometry::DepthMap& depth) {
    const int h = depth.height();
    const int w = depth.width();
    if (h <= 0 || w <= 0) {
        throw DataError("write_depth_png: empty depth map");
    }
    cv::Mat mm(h, w, CV_16UC1);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double millimeters = std::clamp(depth.at(r, c) * 1000.0, 0.0, 65535.0);
            mm.at<std::uint16_t>(r, c) = static_cast<std::uint16_t>(std::lround(millimeters));
        }
    }
    if (!cv::imwrite(path, mm)) {
        throw DataError("write_depth_png: cannot write " + path);
    }
}

geometry::DepthMap read_depth_png(const std::string& path) {
    cv::Mat mm = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (mm.empty()) {
        throw DataError("read_depth_png: cannot read " + path);
    }
    if (mm.type() != CV_16UC1) {
        throw DataError("read_depth_png: " + path + " is not a 16-bit single-channel raster");
    }
    geometry::DepthMap depth;
    depth.values = Grid(mm.rows, mm.cols, 0.0);
    for (int r = 0; r < mm.rows; ++r) {
        for (int c = 0; c < mm.cols; ++c) {
            depth.at(r, c) = mm.at<std::uint16_t>(r, c) / 1000.0;
        }
    }
    return depth;
}

void write_keypoints_txt(const std::string& path, const pose::Keypoints2D& keypoints) {
    keypoints.validate();
    std::ofstream out(path);
    if (!out) {
        throw DataError("write_keypoints_txt: cannot write " + path);
    }
    char line[128];
    for (int i = 0; i < keypoints.count(); ++i) {
        const double conf = keypoints.confidence.empty() ? 1.0 : keypoints.confidence[i];
        std::snprintf(line, sizeof(line), "%.17g %.17g %.17g\n", keypoints.joints[i].x(),
                      keypoints.joints[i].y(), conf);
        out << line;
    }
}

pose::Keypoints2D read_keypoints_txt(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("read_keypoints_txt: cannot read " + path);
    }
    pose::Keypoints2D kp;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        double x = 0.0;
        double y = 0.0;
        double conf = 1.0;
        if (!(fields >> x >> y >> conf)) {
            throw DataError("read_keypoints_txt: malformed line in " + path);
        }
        kp.joints.emplace_back(x, y);
        kp.confidence.push_back(conf);
    }
    kp.validate();
    return kp;
}

// ------------------------------------------------------------------ manifest

namespace {

json vec_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec2 json_to_vec2(const json& j) {
    if (!j.is_array() || j.size() != 2) throw DataError("expected a 2-element array");
    return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 json_to_vec3(const json& j) {
    if (!j.is_array() || j.size() != 3) throw DataError("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void check_record(const ManifestRecord& rec, std::size_t index, const fs::path& root) {
    const std::string where = "manifest record " + std::to_string(index) + ": ";
    for (const std::string* p : {&rec.scene_path, &rec.depth_path, &rec.keypoints_path}) {
        if (p->empty()) {
            throw DataError(where + "empty file path");
        }
        if (!fs::exists(root / *p)) {
            throw DataError(where + "missing file " + (root / *p).string());
        }
    }
    try {
        rec.intrinsics.validate();
    } catch (const std::exception& e) {
        throw DataError(where + "intrinsics: " + e.what());
    }
    const double norm = rec.gaze.norm();
    if (std::abs(norm - 1.0) > 1e-6) {
        throw DataError(where + "gaze: norm " + std::to_string(norm) + " is not unit");
    }
    if (!(rec.eye_3d.z() > 0.0)) {
        throw DataError(where + "eye_3d: z must be positive");
    }
    for (int i = 0; i < 2; ++i) {
        if (!(rec.target_2d[i] >= 0.0 && rec.target_2d[i] <= 1.0)) {
            throw DataError(where + "target_2d: outside [0,1]^2");
        }
    }
    if (rec.head_box.x0 < 0 || rec.head_box.y0 < 0 || rec.head_box.x1 > rec.intrinsics.width ||
        rec.head_box.y1 > rec.intrinsics.height || rec.head_box.x0 > rec.head_box.x1 ||
        rec.head_box.y0 > rec.head_box.y1) {
        throw DataError(where + "head_box: outside image bounds");
    }
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("load_manifest: cannot read " + path);
    }
    DatasetManifest manifest;
    manifest.root = fs::path(path).parent_path().string();
    const fs::path root = manifest.root;

    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("load_manifest: " + path + " is empty (missing header)");
    }
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError("load_manifest: malformed header: " + std::string(e.what()));
    }
    if (!header.contains("schema") || header["schema"] != kManifestSchema) {
        throw DataError("load_manifest: schema mismatch, expected " +
                        std::string(kManifestSchema));
    }
    manifest.split = header.value("split", "train");

    std::size_t index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("load_manifest: record " + std::to_string(index) +
                            ": malformed JSON: " + e.what());
        }
        ManifestRecord rec;
        try {
            rec.scene_path = j.at("scene").get<std::string>();
            rec.depth_path = j.at("depth").get<std::string>();
            rec.keypoints_path = j.at("keypoints").get<std::string>();
            const json& k = j.at("intrinsics");
            rec.intrinsics.fx = k.at("fx").get<double>();
            rec.intrinsics.fy = k.at("fy").get<double>();
            rec.intrinsics.cx = k.at("cx").get<double>();
            rec.intrinsics.cy = k.at("cy").get<double>();
            rec.intrinsics.width = k.at("width").get<int>();
            rec.intrinsics.height = k.at("height").get<int>();
            const json& b = j.at("head_box");
            if (!b.is_array() || b.size() != 4) {
                throw DataError("head_box: expected [x0, y0, x1, y1]");
            }
            rec.head_box = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
            rec.eye_2d = json_to_vec2(j.at("eye_2d"));
            rec.eye_3d = json_to_vec3(j.at("eye_3d"));
            rec.gaze = json_to_vec3(j.at("gaze"));
            rec.target_2d = json_to_vec2(j.at("target_2d"));
            rec.target_3d = json_to_vec3(j.at("target_3d"));
        } catch (const json::exception& e) {
            throw DataError("load_manifest: record " + std::to_string(index) + ": " + e.what());
        }
        check_record(rec, index, root);
        manifest.records.push_back(std::move(rec));
        ++index;
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("save_manifest: cannot write " + path);
    }
    json header;
    header["schema"] = kManifestSchema;
    header["split"] = manifest.split;
    out << header.dump() << "\n";
    for (const ManifestRecord& rec : manifest.records) {
        json j;
        j["scene"] = rec.scene_path;
        j["depth"] = rec.depth_path;
        j["keypoints"] = rec.keypoints_path;
        j["intrinsics"] = {{"fx", rec.intrinsics.fx}, {"fy", rec.intrinsics.fy},
                           {"cx", rec.intrinsics.cx}, {"cy", rec.intrinsics.cy},
                           {"width", rec.intrinsics.width}, {"height", rec.intrinsics.height}};
        j["head_box"] = json::array({rec.head_box.x0, rec.head_box.y0, rec.head_box.x1,
                                     rec.head_box.y1});
        j["eye_2d"] = vec_to_json(rec.eye_2d);
        j["eye_3d"] = vec_to_json(rec.eye_3d);
        j["gaze"] = vec_to_json(rec.gaze);
        j["target_2d"] = vec_to_json(rec.target_2d);
        j["target_3d"] = vec_to_json(rec.target_3d);
        out << j.dump() << "\n";
    }
}

DatasetManifest convert_release_layout(const std::string& root) {
    throw DataError("convert_release_layout: the public release layout is not wired up yet; "
                    "write a manifest (" + std::string(kManifestSchema) + ") for " + root +
                    " instead");
}

GazeSample load_sample(const DatasetManifest& manifest, std::size_t index, bool blur_faces) {
    if (index >= manifest.records.size()) {
        throw DataError("load_sample: index " + std::to_string(index) + " out of range");
    }
    const ManifestRecord& rec = manifest.records[index];
    const fs::path root = manifest.root;
    const std::string where = "manifest record " + std::to_string(index) + ": ";

    GazeSample s;
    s.scene = read_scene_png((root / rec.scene_path).string());
    s.depth = read_depth_png((root / rec.depth_path).string());
    s.keypoints = read_keypoints_txt((root / rec.keypoints_path).string());
    s.intrinsics = rec.intrinsics;
    if (s.scene.width != rec.intrinsics.width || s.scene.height != rec.intrinsics.height) {
        throw DataError(where + "scene size does not match the intrinsics");
    }
    s.head_box = rec.head_box;
    s.head_mask = render_head_mask(rec.head_box, s.scene.width, s.scene.height);
    s.eye_2d = rec.eye_2d;
    s.eye_3d = rec.eye_3d;
    s.gt_gaze.dir = rec.gaze;
    s.gt_target_2d = rec.target_2d;
    s.gt_target_3d = rec.target_3d;

    if (blur_faces) {
        s.scene = blur_face(s.scene, s.head_box);
    }
    try {
        s.validate();
    } catch (const DataError& e) {
        throw DataError(where + e.what());
    }
    return s;
}

// ------------------------------------------------------------------ privacy

ImageU8 blur_face(const ImageU8& scene, const Rect& head_box, Warnings* sink) {
    if (head_box.empty()) {
        emit_warning(sink, "blur_face: degenerate head box, nothing blurred");
        return scene;
    }
    if (head_box.x0 < 0 || head_box.y0 < 0 || head_box.x1 > scene.width ||
        head_box.y1 > scene.height) {
        throw DataError("blur_face: head box exceeds image bounds");
    }
    ImageU8 out = scene;
    cv::Mat img(out.height, out.width, CV_8UC3, out.data.data());
    cv::Mat roi = img(cv::Range(head_box.y0, head_box.y1), cv::Range(head_box.x0, head_box.x1));

    const double sigma = std::max(head_box.width(), head_box.height()) / 8.0;
    const int ksize = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
    // BORDER_ISOLATED keeps the kernel from reading pixels outside the box,
    // so the blur reflects at the box edges instead of leaking context in.
    cv::GaussianBlur(roi, roi, cv::Size(ksize, ksize), sigma, sigma,
                     cv::BORDER_REFLECT_101 | cv::BORDER_ISOLATED);
    return out;
}

BlurAudit audit_blur(const ImageU8& original, const ImageU8& blurred, const Rect& head_box) {
    BlurAudit audit;
    if (original.width != blurred.width || original.height != blurred.height ||
        original.channels != blurred.channels) {
        return audit;
    }
    audit.exterior_identical = true;
    for (int r = 0; r < original.height; ++r) {
        for (int c = 0; c < original.width; ++c) {
            const bool inside = head_box.contains(c, r);
            for (int ch = 0; ch < original.channels; ++ch) {
                if (original.at(r, c, ch) != blurred.at(r, c, ch)) {
                    if (inside) {
                        audit.interior_changed = true;
                    } else {
                        audit.exterior_identical = false;
                    }
                }
            }
        }
    }
    return audit;
}

// ------------------------------------------------------------------ augment

namespace {

void swap_lr_joints(pose::Keypoints2D& kp) {
    // Left/right joints alternate in pairs starting at index 1 (the eyes).
    for (int left = 1; left + 1 < kp.count(); left += 2) {
        std::swap(kp.joints[left], kp.joints[left + 1]);
        if (!kp.confidence.empty()) {
            std::swap(kp.confidence[left], kp.confidence[left + 1]);
        }
    }
}

std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

/// Pixel-center bilinear resample of one crop region to kSceneSize.
ImageU8 resample_scene(const ImageU8& scene, int ox, int oy, int cw, int ch) {
    ImageU8 out(kSceneSize, kSceneSize, 3);
    const double sx = static_cast<double>(cw) / kSceneSize;
    const double sy = static_cast<double>(ch) / kSceneSize;
    for (int r = 0; r < kSceneSize; ++r) {
        const double src_y = std::clamp((r + 0.5) * sy - 0.5, 0.0, ch - 1.0);
        const int y0 = static_cast<int>(src_y);
        const int y1 = std::min(y0 + 1, ch - 1);
        const double fy = src_y - y0;
        for (int c = 0; c < kSceneSize; ++c) {
            const double src_x = std::clamp((c + 0.5) * sx - 0.5, 0.0, cw - 1.0);
            const int x0 = static_cast<int>(src_x);
            const int x1 = std::min(x0 + 1, cw - 1);
            const double fx = src_x - x0;
            for (int chan = 0; chan < 3; ++chan) {
                const double v00 = scene.at(oy + y0, ox + x0, chan);
                const double v01 = scene.at(oy + y0, ox + x1, chan);
                const double v10 = scene.at(oy + y1, ox + x0, chan);
                const double v11 = scene.at(oy + y1, ox + x1, chan);
                const double top = v00 + fx * (v01 - v00);
                const double bot = v10 + fx * (v11 - v10);
                out.at(r, c, chan) = clamp_u8(top + fy * (bot - top));
            }
        }
    }
    return out;
}

GazeSample crop_sample(const GazeSample& s, int ox, int oy, int cw, int ch) {
    GazeSample out = s;
    const int size = kSceneSize;
    const double ax = static_cast<double>(size) / cw;
    const double ay = static_cast<double>(size) / ch;

    out.scene = resample_scene(s.scene, ox, oy, cw, ch);
    out.depth.values = Grid(size, size, 0.0);
    for (int r = 0; r < size; ++r) {
        const int src_r = oy + geometry::rescale_index(r, size, ch);
        for (int c = 0; c < size; ++c) {
            const int src_c = ox + geometry::rescale_index(c, size, cw);
            out.depth.at(r, c) = s.depth.at(src_r, src_c);
        }
    }

    auto map_point = [&](const Vec2& p) -> Vec2 {
        return {(p.x() + 0.5 - ox) * ax - 0.5, (p.y() + 0.5 - oy) * ay - 0.5};
    };
    for (auto& j : out.keypoints.joints) {
        j = map_point(j);
    }
    out.eye_2d = map_point(s.eye_2d);
    out.gt_target_2d = {(s.gt_target_2d.x() * s.scene.width - ox) / cw,
                        (s.gt_target_2d.y() * s.scene.height - oy) / ch};
    out.gt_target_2d.x() = std::clamp(out.gt_target_2d.x(), 0.0, 1.0);
    out.gt_target_2d.y() = std::clamp(out.gt_target_2d.y(), 0.0, 1.0);

    out.intrinsics.fx = s.intrinsics.fx * ax;
    out.intrinsics.fy = s.intrinsics.fy * ay;
    out.intrinsics.cx = (s.intrinsics.cx + 0.5 - ox) * ax - 0.5;
    out.intrinsics.cy = (s.intrinsics.cy + 0.5 - oy) * ay - 0.5;
    out.intrinsics.width = size;
    out.intrinsics.height = size;

    // Box corners are grid lines, so they scale without the half-pixel shift.
    out.head_box.x0 = std::clamp(static_cast<int>(std::lround((s.head_box.x0 - ox) * ax)), 0, size);
    out.head_box.x1 = std::clamp(static_cast<int>(std::lround((s.head_box.x1 - ox) * ax)), 0, size);
    out.head_box.y0 = std::clamp(static_cast<int>(std::lround((s.head_box.y0 - oy) * ay)), 0, size);
    out.head_box.y1 = std::clamp(static_cast<int>(std::lround((s.head_box.y1 - oy) * ay)), 0, size);
    out.head_mask = render_head_mask(out.head_box, size, size);
    return out;
}

}  // namespace

GazeSample flip_horizontal(const GazeSample& sample) {
    GazeSample out = sample;
    const int w = sample.scene.width;
    const int h = sample.scene.height;

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < sample.scene.channels; ++ch) {
                out.scene.at(r, c, ch) = sample.scene.at(r, w - 1 - c, ch);
            }
            out.depth.at(r, c) = sample.depth.at(r, w - 1 - c);
        }
    }
    for (int r = 0; r < out.head_mask.height(); ++r) {
        for (int c = 0; c < out.head_mask.width(); ++c) {
            out.head_mask.at(r, c) = sample.head_mask.at(r, out.head_mask.width() - 1 - c);
        }
    }

    for (auto& j : out.keypoints.joints) {
        j.x() = (w - 1) - j.x();
    }
    swap_lr_joints(out.keypoints);

    out.head_box.x0 = w - sample.head_box.x1;
    out.head_box.x1 = w - sample.head_box.x0;
    out.eye_2d.x() = (w - 1) - sample.eye_2d.x();
    out.gt_target_2d.x() = 1.0 - sample.gt_target_2d.x();
    out.eye_3d.x() = -sample.eye_3d.x();
    out.gt_target_3d.x() = -sample.gt_target_3d.x();
    out.gt_gaze.dir.x() = -sample.gt_gaze.dir.x();
    out.intrinsics.cx = (w - 1) - sample.intrinsics.cx;
    return out;
}

GazeSample augment(const GazeSample& sample, std::uint64_t seed) {
    nn::Rng rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GazeSample out = sample;

    if (uni(rng) < 0.5) {
        const int w = sample.scene.width;
        const int h = sample.scene.height;
        const double scale = 0.8 + 0.2 * uni(rng);
        const int cw = std::max(2, static_cast<int>(std::lround(w * scale)));
        const int ch = std::max(2, static_cast<int>(std::lround(h * scale)));
        for (int attempt = 0; attempt < 10; ++attempt) {
            const int ox = static_cast<int>(uni(rng) * (w - cw + 1));
            const int oy = static_cast<int>(uni(rng) * (h - ch + 1));
            const double tu = out.gt_target_2d.x() * w - 0.5;
            const double tv = out.gt_target_2d.y() * h - 0.5;
            const bool target_in = tu >= ox + 1 && tu <= ox + cw - 2 && tv >= oy + 1 &&
                                   tv <= oy + ch - 2;
            const bool eye_in = out.eye_2d.x() >= ox && out.eye_2d.x() <= ox + cw - 1 &&
                                out.eye_2d.y() >= oy && out.eye_2d.y() <= oy + ch - 1;
            if (target_in && eye_in) {
                out = crop_sample(out, ox, oy, cw, ch);
                break;
            }
        }
    }

    if (uni(rng) < 0.5) {
        out = flip_horizontal(out);
    }

    const double saturation = 0.8 + 0.4 * uni(rng);
    const double contrast = 0.9 + 0.2 * uni(rng);
    const double brightness = -20.0 + 40.0 * uni(rng);
    for (int r = 0; r < out.scene.height; ++r) {
        for (int c = 0; c < out.scene.width; ++c) {
            const double red = out.scene.at(r, c, 0);
            const double green = out.scene.at(r, c, 1);
            const double blue = out.scene.at(r, c, 2);
            const double gray = 0.299 * red + 0.587 * green + 0.114 * blue;
            const double px[3] = {red, green, blue};
            for (int ch = 0; ch < 3; ++ch) {
                double v = gray + saturation * (px[ch] - gray);
                v = 128.0 + contrast * (v - 128.0);
                out.scene.at(r, c, ch) = clamp_u8(v + brightness);
            }
        }
    }
    out.validate();
    return out;
}

// ------------------------------------------------------------------ tensors

nn::Tensor pose_input(const std::vector<GazeSample>& samples, bool use_full_body) {
    if (samples.empty()) {
        throw DataError("pose_input: empty batch");
    }
    const int joints = use_full_body ? pose::kFullBodyJointCount : pose::kUpperBodyJointCount;
    nn::Tensor out({static_cast<int>(samples.size()), 2 * joints});
    for (std::size_t n = 0; n < samples.size(); ++n) {
        pose::Keypoints2D kp =
            use_full_body ? samples[n].keypoints : pose::select_upper_body(samples[n].keypoints);
        if (kp.count() != joints) {
            throw DataError("pose_input: sample " + std::to_string(n) + " has " +
                            std::to_string(kp.count()) + " joints, expected " +
                            std::to_string(joints));
        }
        const std::vector<double> flat = pose::normalize_keypoints(kp).flattened();
        std::copy(flat.begin(), flat.end(), out.data() + n * flat.size());
    }
    return out;
}

nn::Tensor depth_input(const std::vector<GazeSample>& samples, int size) {
    if (samples.empty() || size <= 0) {
        throw DataError("depth_input: empty batch or non-positive size");
    }
    nn::Tensor out({static_cast<int>(samples.size()), 1, size, size});
    for (std::size_t n = 0; n < samples.size(); ++n) {
        const geometry::DepthMap& d = samples[n].depth;
        for (int r = 0; r < size; ++r) {
            const int src_r = geometry::rescale_index(r, size, d.height());
            for (int c = 0; c < size; ++c) {
                const int src_c = geometry::rescale_index(c, size, d.width());
                out.at(static_cast<int>(n), 0, r, c) = d.at(src_r, src_c);
            }
        }
    }
    return out;
}

nn::Tensor heatmap_input(const std::vector<GazeSample>& samples,
                         const std::vector<geometry::FovHeatmaps>& fov) {
    if (samples.empty() || samples.size() != fov.size()) {
        throw DataError("heatmap_input: batch and field-of-view lists must match");
    }
    const int size = kSceneSize;
    nn::Tensor out({static_cast<int>(samples.size()), 6, size, size});
    for (std::size_t n = 0; n < samples.size(); ++n) {
        const GazeSample& s = samples[n];
        if (s.scene.width != size || s.scene.height != size) {
            throw DataError("heatmap_input: sample " + std::to_string(n) + " is not " +
                            std::to_string(size) + "x" + std::to_string(size));
        }
        if (fov[n].v.height() != size || fov[n].v.width() != size) {
            throw DataError("heatmap_input: field-of-view maps must be scene-sized");
        }
        const int ni = static_cast<int>(n);
        for (int r = 0; r < size; ++r) {
            for (int c = 0; c < size; ++c) {
                out.at(ni, 0, r, c) = s.scene.at(r, c, 0) / 255.0;
                out.at(ni, 1, r, c) = s.scene.at(r, c, 1) / 255.0;
                out.at(ni, 2, r, c) = s.scene.at(r, c, 2) / 255.0;
                out.at(ni, 3, r, c) = s.head_mask.at(r, c);
                out.at(ni, 4, r, c) = fov[n].v.at(r, c);
                out.at(ni, 5, r, c) = fov[n].v_hat.at(r, c);
            }
        }
    }
    return out;
}

}  // namespace gaze3d::data
