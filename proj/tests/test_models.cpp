// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/models.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace gaze3d;
using namespace gaze3d::models;
namespace ts = gaze3d::testsupport;

namespace {

Tensor random_tensor(std::vector<int> shape, nn::Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    t.fill_uniform(rng, lo, hi);
    return t;
}

double weighted_sum(const Tensor& y, const Tensor& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * w[i];
    return s;
}

std::vector<std::size_t> spread_indices(std::size_t numel, std::size_t count) {
    std::vector<std::size_t> idx;
    count = std::min(count, numel);
    for (std::size_t i = 0; i < count; ++i) idx.push_back(i * numel / count);
    return idx;
}

Tensor random_pose(int n, nn::Rng& rng) { return random_tensor({n, 26}, rng, -1.5, 1.5); }

Tensor random_depth(int n, int size, nn::Rng& rng) {
    return random_tensor({n, 1, size, size}, rng, 0.5, 5.0);
}

}  // namespace

// ====================================================================
// GazeNet
// ====================================================================

TEST(Models, GazeNetOutputsUnitVectors) {
    GazeNet net(GazeNetConfig::tiny(), 42);
    nn::Rng rng(1);
    const Tensor gaze = net.forward(random_pose(3, rng), random_depth(3, 64, rng), false);
    ASSERT_EQ(gaze.ndim(), 2);
    ASSERT_EQ(gaze.dim(0), 3);
    ASSERT_EQ(gaze.dim(1), 3);
    for (int i = 0; i < 3; ++i) {
        const double n = std::sqrt(gaze.at(i, 0) * gaze.at(i, 0) + gaze.at(i, 1) * gaze.at(i, 1) +
                                   gaze.at(i, 2) * gaze.at(i, 2));
        EXPECT_NEAR(n, 1.0, 1e-12);
    }
}

TEST(Models, GazeNetRejectsBadShapes) {
    GazeNet net(GazeNetConfig::tiny(), 42);
    nn::Rng rng(2);
    EXPECT_THROW(net.forward(random_tensor({2, 10}, rng), random_depth(2, 64, rng), false),
                 ShapeError);
    EXPECT_THROW(net.forward(random_pose(2, rng), random_tensor({2, 3, 64, 64}, rng), false),
                 ShapeError);
    EXPECT_THROW(net.forward(random_pose(2, rng), random_depth(3, 64, rng), false), ShapeError);
}

TEST(Models, GazeNetSeedDeterminism) {
    GazeNet a(GazeNetConfig::tiny(), 7);
    GazeNet b(GazeNetConfig::tiny(), 7);
    GazeNet c(GazeNetConfig::tiny(), 8);
    nn::Rng rng(3);
    const Tensor pose = random_pose(2, rng);
    const Tensor depth = random_depth(2, 64, rng);

    const Tensor ya = a.forward(pose, depth, false);
    const Tensor yb = b.forward(pose, depth, false);
    const Tensor yc = c.forward(pose, depth, false);
    for (std::size_t i = 0; i < ya.numel(); ++i) EXPECT_EQ(ya[i], yb[i]);

    bool differs = false;
    for (std::size_t i = 0; i < ya.numel(); ++i) differs |= ya[i] != yc[i];
    EXPECT_TRUE(differs);
}

TEST(Models, GazeNetGradients) {
    GazeNet net(GazeNetConfig::tiny(), 11);
    nn::Rng rng(4);
    const Tensor pose = random_pose(2, rng);
    const Tensor depth = random_depth(2, 32, rng);
    Tensor w = random_tensor({2, 3}, rng);

    for (nn::Param* p : net.parameters()) p->grad.set_zero();
    net.forward(pose, depth, true);
    net.backward(w);

    auto loss = [&] { return weighted_sum(net.forward(pose, depth, true), w); };

    // One tensor from each branch of the network.
    const std::vector<std::string> probe = {
        "gaze.pose_mlp.0.weight",     "gaze.depth_encoder.stem.conv.weight",
        "gaze.depth_fc.0.bias",       "gaze.fuse.attn.wq",
        "gaze.fuse.norm2.gamma",      "gaze.head.2.weight",
    };
    int probed = 0;
    for (nn::Param* p : net.parameters()) {
        if (std::find(probe.begin(), probe.end(), p->name) == probe.end()) continue;
        const auto r = ts::fd_check(loss, p->value, p->grad,
                                    spread_indices(p->value.numel(), 6), 1e-6);
        EXPECT_LT(r.max_rel_err, 1e-3) << p->name;
        ++probed;
    }
    EXPECT_EQ(probed, static_cast<int>(probe.size()));
}

TEST(Models, GazeNetParameterCountsAreFrozen) {
    GazeNet tiny(GazeNetConfig::tiny(), 1);
    EXPECT_EQ(tiny.num_parameters(), 17667u);
    // Full preset: a 50-layer single-channel encoder plus MLP, fusion and
    // head. Checked once at this size and pinned.
    GazeNet full(GazeNetConfig::full(), 1);
    EXPECT_EQ(full.num_parameters(), 25384451u);
}

TEST(Models, GazeNetConfigValidation) {
    GazeNetConfig cfg = GazeNetConfig::tiny();
    cfg.pose_mlp_dims.back() = 16;  // != attention_dim
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = GazeNetConfig::tiny();
    cfg.attention_heads = 5;  // 32 % 5 != 0
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = GazeNetConfig::tiny();
    cfg.depth_encoder.in_channels = 3;
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = GazeNetConfig::tiny();
    cfg.dropout = 1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);

    EXPECT_NO_THROW(GazeNetConfig::full().validate());
}

// ====================================================================
// HeatmapNet
// ====================================================================

TEST(Models, HeatmapNetOutputShapeAndRange) {
    HeatmapNet net(HeatmapNetConfig::tiny(), 13);
    nn::Rng rng(5);
    const Tensor x = random_tensor({1, 6, 224, 224}, rng, 0.0, 1.0);
    const Tensor y = net.forward(x, false);
    ASSERT_EQ(y.ndim(), 4);
    EXPECT_EQ(y.dim(0), 1);
    EXPECT_EQ(y.dim(1), 1);
    EXPECT_EQ(y.dim(2), 64);
    EXPECT_EQ(y.dim(3), 64);
    for (std::size_t i = 0; i < y.numel(); ++i) {
        EXPECT_GT(y[i], 0.0);
        EXPECT_LT(y[i], 1.0);
    }
    EXPECT_THROW(net.forward(random_tensor({1, 3, 224, 224}, rng), false), ShapeError);
}

TEST(Models, HeatmapNetGradientsIncludingInput) {
    HeatmapNet net(HeatmapNetConfig::tiny(), 17);
    nn::Rng rng(6);
    Tensor x = random_tensor({1, 6, 224, 224}, rng, 0.0, 1.0);
    Tensor w = random_tensor({1, 1, 64, 64}, rng);

    for (nn::Param* p : net.parameters()) p->grad.set_zero();
    net.forward(x, true);
    const Tensor gx = net.backward(w);
    ASSERT_TRUE(gx.same_shape(x));

    auto loss = [&] { return weighted_sum(net.forward(x, true), w); };

    const std::vector<std::string> probe = {
        "heatmap.encoder.stem.conv.weight",
        "heatmap.decoder.0.weight",
        "heatmap.decoder.8.weight",  // final transposed convolution
    };
    for (nn::Param* p : net.parameters()) {
        if (std::find(probe.begin(), probe.end(), p->name) == probe.end()) continue;
        const auto r = ts::fd_check(loss, p->value, p->grad,
                                    spread_indices(p->value.numel(), 4), 1e-6);
        EXPECT_LT(r.max_rel_err, 1e-3) << p->name;
    }

    // Input gradient on the two field-of-view channels: this is the path
    // that carries the heatmap loss back into the gaze network.
    const std::size_t plane = 224 * 224;
    std::vector<std::size_t> input_coords;
    for (int i = 0; i < 4; ++i) {
        input_coords.push_back(4 * plane + 3000 + 9000 * static_cast<std::size_t>(i));  // V
        input_coords.push_back(5 * plane + 4000 + 9000 * static_cast<std::size_t>(i));  // V-hat
    }
    const auto r = ts::fd_check(loss, x, gx, input_coords, 1e-6);
    EXPECT_LT(r.max_rel_err, 1e-3) << "input (fov channels)";
}

TEST(Models, HeatmapNetParameterCountsAreFrozen) {
    HeatmapNet tiny(HeatmapNetConfig::tiny(), 1);
    EXPECT_EQ(tiny.num_parameters(), 12665u);
    HeatmapNet full(HeatmapNetConfig::full(), 1);
    EXPECT_EQ(full.num_parameters(), 26408385u);
}

TEST(Models, HeatmapNetConfigValidation) {
    HeatmapNetConfig cfg = HeatmapNetConfig::tiny();
    cfg.encoder.in_channels = 3;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = HeatmapNetConfig::tiny();
    cfg.dec_channels3 = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_NO_THROW(HeatmapNetConfig::full().validate());
}

// ====================================================================
// Checkpoint round trip through the models
// ====================================================================

TEST(Models, StateRoundTripReproducesOutputsExactly) {
    nn::Rng rng(7);
    const Tensor pose = random_pose(2, rng);
    const Tensor depth = random_depth(2, 64, rng);

    GazeNet a(GazeNetConfig::tiny(), 21);
    // Move batch-norm running stats off their init so buffers matter.
    a.forward(pose, depth, true);
    const Tensor ya = a.forward(pose, depth, false);

    nn::TensorArchive archive;
    archive.metadata = "{\"stage\": \"gaze\"}";
    save_state(archive, "", a.parameters(), a.buffers());

    const std::string path =
        (std::filesystem::temp_directory_path() / "gaze3d_model_roundtrip.bin").string();
    archive.save(path);

    GazeNet b(GazeNetConfig::tiny(), 999);  // different init, then overwritten
    const nn::TensorArchive loaded = nn::TensorArchive::load(path);
    std::filesystem::remove(path);
    load_state(loaded, "", b.parameters(), b.buffers());

    const Tensor yb = b.forward(pose, depth, false);
    for (std::size_t i = 0; i < ya.numel(); ++i) EXPECT_EQ(ya[i], yb[i]);
}

TEST(Models, LoadStateRejectsMismatchedShapes) {
    GazeNet tiny(GazeNetConfig::tiny(), 3);
    nn::TensorArchive archive;
    save_state(archive, "", tiny.parameters(), tiny.buffers());

    GazeNetConfig other = GazeNetConfig::tiny();
    other.pose_mlp_dims = {16, 32};
    GazeNet different(other, 3);
    EXPECT_THROW(load_state(archive, "", different.parameters(), different.buffers()), DataError);

    nn::TensorArchive empty;
    EXPECT_THROW(load_state(empty, "", tiny.parameters(), tiny.buffers()), DataError);
}
