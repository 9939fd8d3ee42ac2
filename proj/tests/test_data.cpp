// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/data.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <gaze3d/geometry.hpp>
#include <gaze3d/pose.hpp>

namespace gaze3d::data {
namespace {

namespace fs = std::filesystem;

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        path_ = fs::temp_directory_path() / ("gaze3d_test_" + tag);
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string str() const { return path_.string(); }
    fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

  private:
    fs::path path_;
};

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void expect_grid_eq(const Grid& a, const Grid& b) {
    ASSERT_EQ(a.height(), b.height());
    ASSERT_EQ(a.width(), b.width());
    for (int r = 0; r < a.height(); ++r) {
        for (int c = 0; c < a.width(); ++c) {
            ASSERT_DOUBLE_EQ(a.at(r, c), b.at(r, c)) << "grid mismatch at (" << r << ", " << c
                                                     << ")";
        }
    }
}

DatasetManifest make_synth(const std::string& dir, int count, std::uint64_t seed,
                           const std::string& split = "train") {
    SynthConfig cfg;
    cfg.count = count;
    cfg.out_dir = dir;
    cfg.split = split;
    return synth_generate(cfg, seed);
}

TEST(DataIo, ScenePngRoundTripIsBitExact) {
    TempDir dir("scene_png");
    ImageU8 img(16, 12, 3);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                img.at(r, c, ch) = static_cast<std::uint8_t>((r * 31 + c * 7 + ch * 11) % 256);
            }
        }
    }
    const std::string path = (dir / "img.png").string();
    write_scene_png(path, img);
    const ImageU8 back = read_scene_png(path);
    ASSERT_EQ(back.width, img.width);
    ASSERT_EQ(back.height, img.height);
    EXPECT_EQ(back.data, img.data);
}

TEST(DataIo, DepthPngRoundTripsMillimetreQuantizedValues) {
    TempDir dir("depth_png");
    geometry::DepthMap depth;
    depth.values = Grid(8, 10);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 10; ++c) {
            depth.values.at(r, c) = std::lround((0.5 + 0.37 * r + 0.013 * c) * 1000.0) / 1000.0;
        }
    }
    depth.values.at(3, 4) = 0.0;
    const std::string path = (dir / "d.png").string();
    write_depth_png(path, depth);
    const geometry::DepthMap back = read_depth_png(path);
    ASSERT_EQ(back.values.height(), 8);
    ASSERT_EQ(back.values.width(), 10);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 10; ++c) {
            EXPECT_DOUBLE_EQ(back.values.at(r, c), depth.values.at(r, c));
        }
    }
}

TEST(DataIo, KeypointsTxtRoundTrip) {
    TempDir dir("kp_txt");
    pose::Keypoints2D kp;
    kp.joints.resize(pose::kFullBodyJointCount);
    kp.confidence.assign(pose::kFullBodyJointCount, 1.0);
    for (int i = 0; i < pose::kFullBodyJointCount; ++i) {
        kp.joints[i] = Vec2(10.25 + 3.5 * i, 40.125 + 2.0 * i);
        kp.confidence[i] = 1.0 - 0.01 * i;
    }
    const std::string path = (dir / "kp.txt").string();
    write_keypoints_txt(path, kp);
    const pose::Keypoints2D back = read_keypoints_txt(path);
    ASSERT_EQ(back.count(), kp.count());
    for (int i = 0; i < kp.count(); ++i) {
        EXPECT_DOUBLE_EQ(back.joints[i].x(), kp.joints[i].x());
        EXPECT_DOUBLE_EQ(back.joints[i].y(), kp.joints[i].y());
        EXPECT_DOUBLE_EQ(back.confidence[i], kp.confidence[i]);
    }
}

TEST(Manifest, SaveLoadRoundTripPreservesRecords) {
    TempDir dir("manifest_rt");
    const DatasetManifest m = make_synth(dir.str(), 4, 11);
    ASSERT_EQ(m.size(), 4u);

    const std::string copy = (dir / "copy.jsonl").string();
    save_manifest(m, copy);
    const DatasetManifest back = load_manifest(copy);
    ASSERT_EQ(back.size(), m.size());
    EXPECT_EQ(back.split, m.split);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const ManifestRecord& a = m.records[i];
        const ManifestRecord& b = back.records[i];
        EXPECT_EQ(a.scene_path, b.scene_path);
        EXPECT_EQ(a.depth_path, b.depth_path);
        EXPECT_EQ(a.keypoints_path, b.keypoints_path);
        EXPECT_DOUBLE_EQ(a.intrinsics.fx, b.intrinsics.fx);
        EXPECT_DOUBLE_EQ(a.eye_3d.z(), b.eye_3d.z());
        EXPECT_DOUBLE_EQ(a.gaze.x(), b.gaze.x());
        EXPECT_DOUBLE_EQ(a.target_3d.y(), b.target_3d.y());
        EXPECT_EQ(a.head_box.x0, b.head_box.x0);
        EXPECT_EQ(a.head_box.y1, b.head_box.y1);
    }
}

TEST(Manifest, EmptyManifestLoads) {
    TempDir dir("manifest_empty");
    const std::string path = (dir / "m.jsonl").string();
    {
        std::ofstream out(path);
        out << R"({"schema":"gaze3d-manifest/1","split":"val"})" << "\n";
    }
    const DatasetManifest m = load_manifest(path);
    EXPECT_EQ(m.size(), 0u);
    EXPECT_EQ(m.split, "val");
}

TEST(Manifest, RejectsUnknownSchema) {
    TempDir dir("manifest_schema");
    const std::string path = (dir / "m.jsonl").string();
    {
        std::ofstream out(path);
        out << R"({"schema":"gaze3d-manifest/99","split":"train"})" << "\n";
    }
    try {
        load_manifest(path);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("schema"), std::string::npos);
    }
}

TEST(Manifest, NamesOffendingRecordAndField) {
    TempDir dir("manifest_field");
    const DatasetManifest m = make_synth(dir.str(), 2, 12);
    DatasetManifest bad = m;
    bad.records[1].gaze = Vec3(0.0, 0.0, 2.0);
    const std::string path = (dir / "bad.jsonl").string();
    save_manifest(bad, path);
    try {
        load_manifest(path);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("record 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("gaze"), std::string::npos) << msg;
    }
}

TEST(Manifest, RejectsMalformedJsonLine) {
    TempDir dir("manifest_json");
    const std::string path = (dir / "m.jsonl").string();
    {
        std::ofstream out(path);
        out << R"({"schema":"gaze3d-manifest/1","split":"train"})" << "\n";
        out << "{not json\n";
    }
    EXPECT_THROW(load_manifest(path), DataError);
}

TEST(Manifest, ConverterStubReportsUnsupportedLayout) {
    TempDir dir("converter");
    EXPECT_THROW(convert_release_layout(dir.str()), DataError);
}

TEST(Blur, ExteriorBitExactInteriorChanged) {
    TempDir dir("blur_audit");
    const DatasetManifest m = make_synth(dir.str(), 1, 21);
    const GazeSample raw = load_sample(m, 0, false);

    const ImageU8 blurred = blur_face(raw.scene, raw.head_box);
    const BlurAudit audit = audit_blur(raw.scene, blurred, raw.head_box);
    EXPECT_TRUE(audit.exterior_identical);
    EXPECT_TRUE(audit.interior_changed);

    for (int r = 0; r < raw.scene.height; ++r) {
        for (int c = 0; c < raw.scene.width; ++c) {
            if (raw.head_box.contains(c, r)) continue;
            for (int ch = 0; ch < 3; ++ch) {
                ASSERT_EQ(blurred.at(r, c, ch), raw.scene.at(r, c, ch))
                    << "pixel (" << r << ", " << c << ") changed outside the head box";
            }
        }
    }
}

TEST(Blur, LoadSampleAppliesBlurOnlyWhenRequested) {
    TempDir dir("blur_load");
    const DatasetManifest m = make_synth(dir.str(), 1, 22);
    const GazeSample raw = load_sample(m, 0, false);
    const GazeSample blurred = load_sample(m, 0, true);
    const BlurAudit audit = audit_blur(raw.scene, blurred.scene, raw.head_box);
    EXPECT_TRUE(audit.exterior_identical);
    EXPECT_TRUE(audit.interior_changed);
}

TEST(Blur, DegenerateBoxWarnsAndReturnsInputUnchanged) {
    ImageU8 img(20, 20, 3);
    for (auto& p : img.data) p = 77;
    Rect box{5, 5, 5, 9};
    Warnings warnings;
    const ImageU8 out = blur_face(img, box, &warnings);
    EXPECT_EQ(out.data, img.data);
    ASSERT_FALSE(warnings.messages().empty());
}

TEST(Blur, OutOfBoundsBoxThrows) {
    ImageU8 img(20, 20, 3);
    EXPECT_THROW(blur_face(img, Rect{-1, 0, 5, 5}), DataError);
    EXPECT_THROW(blur_face(img, Rect{0, 0, 21, 5}), DataError);
}

TEST(Flip, DoubleFlipIsIdentity) {
    TempDir dir("flip_inv");
    const DatasetManifest m = make_synth(dir.str(), 2, 31);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const GazeSample s = load_sample(m, i, true);
        const GazeSample back = flip_horizontal(flip_horizontal(s));
        EXPECT_EQ(back.scene.data, s.scene.data);
        expect_grid_eq(back.depth.values, s.depth.values);
        for (int j = 0; j < s.keypoints.count(); ++j) {
            EXPECT_DOUBLE_EQ(back.keypoints.joints[j].x(), s.keypoints.joints[j].x());
            EXPECT_DOUBLE_EQ(back.keypoints.joints[j].y(), s.keypoints.joints[j].y());
        }
        EXPECT_DOUBLE_EQ(back.gt_gaze.dir.x(), s.gt_gaze.dir.x());
        EXPECT_DOUBLE_EQ(back.gt_target_2d.x(), s.gt_target_2d.x());
        EXPECT_EQ(back.head_box.x0, s.head_box.x0);
        EXPECT_EQ(back.head_box.x1, s.head_box.x1);
        EXPECT_DOUBLE_EQ(back.intrinsics.cx, s.intrinsics.cx);
    }
}

TEST(Flip, MirrorsGeometryConsistently) {
    TempDir dir("flip_geo");
    const DatasetManifest m = make_synth(dir.str(), 1, 32);
    const GazeSample s = load_sample(m, 0, true);
    const GazeSample f = flip_horizontal(s);

    EXPECT_DOUBLE_EQ(f.gt_gaze.dir.x(), -s.gt_gaze.dir.x());
    EXPECT_DOUBLE_EQ(f.gt_gaze.dir.y(), s.gt_gaze.dir.y());
    EXPECT_DOUBLE_EQ(f.gt_gaze.dir.z(), s.gt_gaze.dir.z());
    EXPECT_DOUBLE_EQ(f.eye_3d.x(), -s.eye_3d.x());
    EXPECT_DOUBLE_EQ(f.gt_target_2d.x(), 1.0 - s.gt_target_2d.x());
    EXPECT_NO_THROW(f.validate());

    const pose::Keypoints2D& orig = s.keypoints;
    const pose::Keypoints2D& flip = f.keypoints;
    const int w = s.scene.width;
    EXPECT_DOUBLE_EQ(flip.joints[pose::kLeftShoulder].x(),
                     (w - 1) - orig.joints[pose::kRightShoulder].x());
    EXPECT_DOUBLE_EQ(flip.joints[pose::kRightEye].x(),
                     (w - 1) - orig.joints[pose::kLeftEye].x());
    EXPECT_DOUBLE_EQ(flip.joints[pose::kNose].x(), (w - 1) - orig.joints[pose::kNose].x());

    const geometry::PointCloud cloud_s = geometry::unproject(s.depth, s.intrinsics);
    const geometry::PointCloud cloud_f = geometry::unproject(f.depth, f.intrinsics);
    for (int r = 0; r < cloud_s.height; r += 37) {
        for (int c = 0; c < cloud_s.width; c += 41) {
            const int mc = cloud_s.width - 1 - c;
            if (!cloud_s.is_valid(r, c)) {
                EXPECT_FALSE(cloud_f.is_valid(r, mc));
                continue;
            }
            EXPECT_NEAR(cloud_f.at(r, mc).x(), -cloud_s.at(r, c).x(), 1e-12);
            EXPECT_NEAR(cloud_f.at(r, mc).y(), cloud_s.at(r, c).y(), 1e-12);
            EXPECT_NEAR(cloud_f.at(r, mc).z(), cloud_s.at(r, c).z(), 1e-12);
        }
    }
}

TEST(Augment, SameSeedIsDeterministic) {
    TempDir dir("aug_det");
    const DatasetManifest m = make_synth(dir.str(), 1, 41);
    const GazeSample s = load_sample(m, 0, true);
    const GazeSample a = augment(s, 777);
    const GazeSample b = augment(s, 777);
    EXPECT_EQ(a.scene.data, b.scene.data);
    expect_grid_eq(a.depth.values, b.depth.values);
    EXPECT_DOUBLE_EQ(a.gt_gaze.dir.x(), b.gt_gaze.dir.x());
    EXPECT_DOUBLE_EQ(a.gt_target_2d.x(), b.gt_target_2d.x());
}

TEST(Augment, PreservesSampleContracts) {
    TempDir dir("aug_valid");
    const DatasetManifest m = make_synth(dir.str(), 2, 42);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const GazeSample s = load_sample(m, i, true);
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            const GazeSample a = augment(s, seed);
            EXPECT_NO_THROW(a.validate());
            EXPECT_NEAR(a.gt_gaze.dir.norm(), 1.0, 1e-9);
            EXPECT_GE(a.gt_target_2d.x(), 0.0);
            EXPECT_LE(a.gt_target_2d.x(), 1.0);
            EXPECT_GE(a.gt_target_2d.y(), 0.0);
            EXPECT_LE(a.gt_target_2d.y(), 1.0);
            EXPECT_EQ(a.scene.width, kSceneSize);
            EXPECT_EQ(a.scene.height, kSceneSize);
        }
    }
}

TEST(Synth, AnnotationsAgreeWithLoadedGeometry) {
    TempDir dir("synth_consistent");
    const DatasetManifest m = make_synth(dir.str(), 8, 51);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const GazeSample s = load_sample(m, i, true);
        const geometry::PointCloud cloud = geometry::unproject(s.depth, s.intrinsics);

        const int u = static_cast<int>(std::lround(s.gt_target_2d.x() * s.scene.width - 0.5));
        const int v = static_cast<int>(std::lround(s.gt_target_2d.y() * s.scene.height - 0.5));
        ASSERT_TRUE(cloud.is_valid(v, u)) << "target pixel carries no depth";
        EXPECT_NEAR((cloud.at(v, u) - s.gt_target_3d).norm(), 0.0, 1e-12);

        const Vec3 expected = (s.gt_target_3d - s.eye_3d).normalized();
        EXPECT_NEAR((expected - s.gt_gaze.dir).norm(), 0.0, 1e-12);
        EXPECT_GT(s.eye_3d.z(), 0.0);
    }
}

TEST(Synth, SameSeedProducesIdenticalFiles) {
    TempDir dir_a("synth_det_a");
    TempDir dir_b("synth_det_b");
    make_synth(dir_a.str(), 3, 61);
    make_synth(dir_b.str(), 3, 61);
    EXPECT_EQ(read_bytes(dir_a / "manifest.jsonl"), read_bytes(dir_b / "manifest.jsonl"));
    EXPECT_EQ(read_bytes(dir_a / "scene_0000.png"), read_bytes(dir_b / "scene_0000.png"));
    EXPECT_EQ(read_bytes(dir_a / "depth_0002.png"), read_bytes(dir_b / "depth_0002.png"));

    TempDir dir_c("synth_det_c");
    make_synth(dir_c.str(), 3, 62);
    EXPECT_NE(read_bytes(dir_a / "scene_0000.png"), read_bytes(dir_c / "scene_0000.png"));
}

TEST(Synth, RejectsInvalidConfig) {
    SynthConfig cfg;
    cfg.count = -1;
    cfg.out_dir = "/tmp/unused";
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.count = 4;
    cfg.out_dir.clear();
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.out_dir = "/tmp/unused";
    cfg.wall_z_min = 5.0;
    cfg.wall_z_max = 4.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(HeadMask, OneInsideBoxZeroOutside) {
    const Rect box{40, 50, 80, 90};
    const Grid mask = render_head_mask(box, kSceneSize, kSceneSize);
    int inside = 0;
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            const double want = box.contains(c, r) ? 1.0 : 0.0;
            ASSERT_EQ(mask.at(r, c), want) << "at (" << r << ", " << c << ")";
            inside += box.contains(c, r) ? 1 : 0;
        }
    }
    EXPECT_EQ(inside, box.width() * box.height());
}

TEST(Packers, PoseInputMatchesNormalizedKeypoints) {
    TempDir dir("pack_pose");
    const DatasetManifest m = make_synth(dir.str(), 3, 71);
    std::vector<GazeSample> samples;
    for (std::size_t i = 0; i < m.size(); ++i) samples.push_back(load_sample(m, i, true));

    const nn::Tensor upper = pose_input(samples, false);
    ASSERT_EQ(upper.dim(0), 3);
    ASSERT_EQ(upper.dim(1), 2 * pose::kUpperBodyJointCount);
    const nn::Tensor full = pose_input(samples, true);
    ASSERT_EQ(full.dim(1), 2 * pose::kFullBodyJointCount);

    for (int n = 0; n < 3; ++n) {
        const std::vector<double> flat =
            pose::normalize_keypoints(pose::select_upper_body(samples[n].keypoints)).flattened();
        for (std::size_t j = 0; j < flat.size(); ++j) {
            EXPECT_DOUBLE_EQ(upper.at(n, static_cast<int>(j)), flat[j]);
        }
    }
}

TEST(Packers, DepthInputUsesNearestSourcePixel) {
    TempDir dir("pack_depth");
    const DatasetManifest m = make_synth(dir.str(), 1, 72);
    const std::vector<GazeSample> samples{load_sample(m, 0, true)};
    const int size = 64;
    const nn::Tensor t = depth_input(samples, size);
    ASSERT_EQ(t.dim(0), 1);
    ASSERT_EQ(t.dim(2), size);
    const geometry::DepthMap& d = samples[0].depth;
    for (int r = 0; r < size; r += 13) {
        for (int c = 0; c < size; c += 17) {
            const int sr = geometry::rescale_index(r, size, d.height());
            const int sc = geometry::rescale_index(c, size, d.width());
            EXPECT_DOUBLE_EQ(t.at(0, 0, r, c), d.at(sr, sc));
        }
    }
}

TEST(Packers, HeatmapInputLaysOutSixChannels) {
    TempDir dir("pack_heat");
    const DatasetManifest m = make_synth(dir.str(), 1, 73);
    const std::vector<GazeSample> samples{load_sample(m, 0, true)};
    const GazeSample& s = samples[0];
    const geometry::PointCloud cloud = geometry::unproject(s.depth, s.intrinsics);
    const geometry::FovHeatmaps fov =
        geometry::compute_fov_heatmaps(cloud, s.eye_3d, s.gt_gaze);
    const nn::Tensor x = heatmap_input(samples, {fov});
    ASSERT_EQ(x.dim(1), 6);
    ASSERT_EQ(x.dim(2), kSceneSize);
    for (int r = 5; r < kSceneSize; r += 59) {
        for (int c = 3; c < kSceneSize; c += 61) {
            EXPECT_DOUBLE_EQ(x.at(0, 0, r, c), s.scene.at(r, c, 0) / 255.0);
            EXPECT_DOUBLE_EQ(x.at(0, 2, r, c), s.scene.at(r, c, 2) / 255.0);
            EXPECT_DOUBLE_EQ(x.at(0, 3, r, c), s.head_mask.at(r, c));
            EXPECT_DOUBLE_EQ(x.at(0, 4, r, c), fov.v.at(r, c));
            EXPECT_DOUBLE_EQ(x.at(0, 5, r, c), fov.v_hat.at(r, c));
        }
    }
}

TEST(Packers, RejectEmptyOrMismatchedBatches) {
    EXPECT_THROW(pose_input({}, false), DataError);
    EXPECT_THROW(depth_input({}, 64), DataError);
    TempDir dir("pack_bad");
    const DatasetManifest m = make_synth(dir.str(), 1, 74);
    const std::vector<GazeSample> samples{load_sample(m, 0, true)};
    EXPECT_THROW(heatmap_input(samples, {}), DataError);
}

TEST(Validate, NamesOffendingField) {
    TempDir dir("validate_field");
    const DatasetManifest m = make_synth(dir.str(), 1, 81);
    GazeSample s = load_sample(m, 0, true);

    GazeSample bad = s;
    bad.gt_gaze.dir *= 2.0;
    try {
        bad.validate();
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("gt_gaze"), std::string::npos);
    }

    bad = s;
    bad.eye_3d.z() = -1.0;
    try {
        bad.validate();
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("eye_3d"), std::string::npos);
    }

    bad = s;
    bad.gt_target_2d.x() = 1.5;
    EXPECT_THROW(bad.validate(), DataError);
}

}  // namespace
}  // namespace gaze3d::data
