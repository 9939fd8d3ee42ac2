// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/training.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <gaze3d/config.hpp>
#include <gaze3d/data.hpp>

namespace gaze3d::training {
namespace {

namespace fs = std::filesystem;

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Small shared corpus generated once; tests that mutate files make their own.
class Corpus {
  public:
    static const Corpus& get() {
        static Corpus instance;
        return instance;
    }
    const data::DatasetManifest& train() const { return train_; }
    const data::DatasetManifest& val() const { return val_; }
    std::string dir(const std::string& leaf) const { return (root_ / leaf).string(); }

  private:
    Corpus() {
        root_ = fs::temp_directory_path() / "gaze3d_test_training";
        fs::remove_all(root_);
        fs::create_directories(root_);
        data::SynthConfig cfg;
        cfg.count = 12;
        cfg.out_dir = (root_ / "train").string();
        cfg.split = "train";
        train_ = data::synth_generate(cfg, 91);
        cfg.count = 6;
        cfg.out_dir = (root_ / "val").string();
        cfg.split = "val";
        val_ = data::synth_generate(cfg, 92);
    }
    fs::path root_;
    data::DatasetManifest train_;
    data::DatasetManifest val_;
};

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.preset = ModelPreset::kTiny;
    cfg.depth_size = 64;
    cfg.gaze_stage = {2, 8, 1e-3, 1e-4};
    cfg.full_stage = {1, 8, 3e-4, 1e-4};
    cfg.seed = 5;
    return cfg;
}

TEST(Config, ParsesEveryKey) {
    config::ConfigMap map = config::ConfigMap::from_text(
        "config_version = 1\n"
        "regime = end_to_end\n"
        "model.preset = tiny\n"
        "model.depth_size = 96\n"
        "seed = 17\n"
        "gaze_stage.epochs = 3\ngaze_stage.batch = 4\n"
        "gaze_stage.lr = 0.002\ngaze_stage.weight_decay = 0.01\n"
        "full_stage.epochs = 5\nfull_stage.batch = 6\n"
        "full_stage.lr = 0.003\nfull_stage.weight_decay = 0.02\n"
        "loss.w_heat = 500\nloss.w_gaze = 7\n"
        "ablation.use_full_body = true\nablation.blur_faces = false\n"
        "train.augment = true\ntrain.grad_clip = 2.5\n",
        "<test>");
    const TrainConfig cfg = TrainConfig::from_map(map);
    EXPECT_EQ(cfg.regime, Regime::kEndToEnd);
    EXPECT_EQ(cfg.preset, ModelPreset::kTiny);
    EXPECT_EQ(cfg.depth_size, 96);
    EXPECT_EQ(cfg.seed, 17u);
    EXPECT_EQ(cfg.gaze_stage.epochs, 3);
    EXPECT_EQ(cfg.gaze_stage.batch, 4);
    EXPECT_DOUBLE_EQ(cfg.gaze_stage.lr, 0.002);
    EXPECT_DOUBLE_EQ(cfg.gaze_stage.weight_decay, 0.01);
    EXPECT_EQ(cfg.full_stage.epochs, 5);
    EXPECT_DOUBLE_EQ(cfg.loss.w_heat, 500.0);
    EXPECT_DOUBLE_EQ(cfg.loss.w_gaze, 7.0);
    EXPECT_TRUE(cfg.use_full_body);
    EXPECT_FALSE(cfg.blur_faces);
    EXPECT_TRUE(cfg.augment);
    EXPECT_DOUBLE_EQ(cfg.grad_clip, 2.5);
}

TEST(Config, RejectsUnknownKeysByName) {
    config::ConfigMap map =
        config::ConfigMap::from_text("regime = multi_stage\nmystery.knob = 1\n", "<test>");
    try {
        TrainConfig::from_map(map);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("mystery.knob"), std::string::npos);
    }
}

TEST(Config, OverridesAndTokenNormalization) {
    const TrainConfig cfg = TrainConfig::from_overrides(
        {"regime=end-to-end", "model.preset=tiny", "gaze_stage.lr=0.01"});
    EXPECT_EQ(cfg.regime, Regime::kEndToEnd);
    EXPECT_EQ(cfg.preset, ModelPreset::kTiny);
    EXPECT_DOUBLE_EQ(cfg.gaze_stage.lr, 0.01);

    EXPECT_THROW(TrainConfig::from_overrides({"model.preset=huge"}), ConfigError);
    EXPECT_THROW(TrainConfig::from_overrides({"regime=cascade"}), ConfigError);
    EXPECT_THROW(TrainConfig::from_overrides({"config_version=2"}), ConfigError);
}

TEST(Config, TextRoundTrip) {
    TrainConfig cfg = tiny_config();
    cfg.regime = Regime::kEndToEnd;
    cfg.use_full_body = true;
    cfg.loss.w_heat = 1234.5;
    cfg.grad_clip = 7.25;

    config::ConfigMap map = config::ConfigMap::from_text(cfg.to_text(), "<round-trip>");
    const TrainConfig back = TrainConfig::from_map(map);
    EXPECT_EQ(back.regime, cfg.regime);
    EXPECT_EQ(back.preset, cfg.preset);
    EXPECT_EQ(back.depth_size, cfg.depth_size);
    EXPECT_EQ(back.seed, cfg.seed);
    EXPECT_EQ(back.gaze_stage.epochs, cfg.gaze_stage.epochs);
    EXPECT_DOUBLE_EQ(back.gaze_stage.lr, cfg.gaze_stage.lr);
    EXPECT_DOUBLE_EQ(back.full_stage.weight_decay, cfg.full_stage.weight_decay);
    EXPECT_DOUBLE_EQ(back.loss.w_heat, cfg.loss.w_heat);
    EXPECT_EQ(back.use_full_body, cfg.use_full_body);
    EXPECT_DOUBLE_EQ(back.grad_clip, cfg.grad_clip);
}

TEST(Config, ValidatesRanges) {
    TrainConfig cfg = tiny_config();
    cfg.gaze_stage.epochs = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.full_stage.lr = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.grad_clip = -0.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.loss.w_gaze = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(PipelineBuild, PresetsDifferAndFullBodyWidensPoseInput) {
    TrainConfig cfg = tiny_config();
    const Pipeline tiny = build_pipeline(cfg);
    cfg.preset = ModelPreset::kFull;
    cfg.depth_size = 224;
    const Pipeline full = build_pipeline(cfg);
    EXPECT_GT(full.gaze->num_parameters(), tiny.gaze->num_parameters());
    EXPECT_GT(full.heatmap->num_parameters(), tiny.heatmap->num_parameters());

    cfg = tiny_config();
    cfg.use_full_body = true;
    const Pipeline wide = build_pipeline(cfg);
    EXPECT_GT(wide.gaze->num_parameters(), tiny.gaze->num_parameters());

    std::vector<data::GazeSample> samples{data::load_sample(Corpus::get().train(), 0, true)};
    const nn::Tensor pose = data::pose_input(samples, true);
    const nn::Tensor depth = data::depth_input(samples, cfg.depth_size);
    const nn::Tensor ghat = wide.gaze->forward(pose, depth, false);
    EXPECT_NEAR(std::hypot(ghat.at(0, 0), std::hypot(ghat.at(0, 1), ghat.at(0, 2))), 1.0,
                1e-9);
}

TEST(PipelineBuild, SameSeedSameInit) {
    const TrainConfig cfg = tiny_config();
    const Pipeline a = build_pipeline(cfg);
    const Pipeline b = build_pipeline(cfg);
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        ASSERT_EQ(pa[i]->name, pb[i]->name);
        ASSERT_TRUE(pa[i]->value.same_shape(pb[i]->value));
        for (std::size_t j = 0; j < pa[i]->value.numel(); ++j) {
            ASSERT_EQ(pa[i]->value[j], pb[i]->value[j]) << pa[i]->name;
        }
    }
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
    const Corpus& corpus = Corpus::get();
    TrainConfig cfg = tiny_config();
    const TrainResult run =
        train_gaze_stage(corpus.train(), corpus.val(), cfg, corpus.dir("ckpt_run"));

    Pipeline models = build_pipeline(cfg);
    nn::AdamConfig opt_cfg;
    opt_cfg.lr = cfg.gaze_stage.lr;
    opt_cfg.weight_decay = cfg.gaze_stage.weight_decay;
    nn::Adam opt(models.gaze->parameters(), opt_cfg);
    const std::string metadata = load_checkpoint(run.last_checkpoint, models, &opt);
    EXPECT_NE(metadata.find("stage=gaze"), std::string::npos);

    const std::string copy = corpus.dir("ckpt_copy.ckpt");
    save_checkpoint(copy, models, &opt, metadata);
    EXPECT_EQ(read_bytes(run.last_checkpoint), read_bytes(copy));
}

TEST(Checkpoint, RoundTripYieldsBitIdenticalEvaluation) {
    const Corpus& corpus = Corpus::get();
    TrainConfig cfg = tiny_config();
    const TrainResult run = train_full(corpus.train(), corpus.val(), cfg,
                                       corpus.dir("eval_run"));

    Pipeline a = build_pipeline(cfg);
    load_checkpoint(run.best_checkpoint, a, nullptr);
    Pipeline b = build_pipeline(cfg);
    load_checkpoint(run.best_checkpoint, b, nullptr);

    const EvalOutcome ea = evaluate(corpus.val(), a, cfg);
    const EvalOutcome eb = evaluate(corpus.val(), b, cfg);
    ASSERT_EQ(ea.per_sample.size(), corpus.val().size());
    ASSERT_EQ(ea.per_sample.size(), eb.per_sample.size());
    EXPECT_EQ(ea.failures, 0u);
    for (std::size_t i = 0; i < ea.per_sample.size(); ++i) {
        EXPECT_EQ(ea.per_sample[i].dist_3d, eb.per_sample[i].dist_3d);
        EXPECT_EQ(ea.per_sample[i].angle_error, eb.per_sample[i].angle_error);
        EXPECT_EQ(ea.per_sample[i].auc, eb.per_sample[i].auc);
        EXPECT_EQ(ea.per_sample[i].dist_2d, eb.per_sample[i].dist_2d);
    }
}

TEST(Training, FixedSeedReproducesLossCurve) {
    const Corpus& corpus = Corpus::get();
    const TrainConfig cfg = tiny_config();
    const TrainResult a =
        train_gaze_stage(corpus.train(), corpus.val(), cfg, corpus.dir("det_a"));
    const TrainResult b =
        train_gaze_stage(corpus.train(), corpus.val(), cfg, corpus.dir("det_b"));
    ASSERT_EQ(a.log_lines.size(), b.log_lines.size());
    EXPECT_EQ(a.log_lines, b.log_lines);
    EXPECT_EQ(read_bytes(a.last_checkpoint), read_bytes(b.last_checkpoint));
}

TEST(Training, LogsOneLinePerEpochAndWritesArtifacts) {
    const Corpus& corpus = Corpus::get();
    TrainConfig cfg = tiny_config();
    cfg.gaze_stage.epochs = 3;
    const TrainResult run =
        train_gaze_stage(corpus.train(), corpus.val(), cfg, corpus.dir("artifacts"));
    EXPECT_EQ(run.log_lines.size(), 3u);
    EXPECT_TRUE(fs::exists(run.best_checkpoint));
    EXPECT_TRUE(fs::exists(run.last_checkpoint));
    EXPECT_TRUE(fs::exists(fs::path(corpus.dir("artifacts")) / "config.txt"));
    EXPECT_TRUE(fs::exists(fs::path(corpus.dir("artifacts")) / "log.txt"));
    for (const std::string& line : run.log_lines) {
        EXPECT_NE(line.find("stage=gaze"), std::string::npos);
        EXPECT_NE(line.find("train_loss="), std::string::npos);
        EXPECT_NE(line.find("val_angle="), std::string::npos);
    }
}

TEST(Training, ZeroHeatmapWeightFreezesHeatmapParameters) {
    const Corpus& corpus = Corpus::get();
    TrainConfig cfg = tiny_config();
    cfg.loss.w_heat = 0.0;
    cfg.full_stage.weight_decay = 0.0;
    const TrainResult run = train_full(corpus.train(), corpus.val(), cfg,
                                       corpus.dir("freeze_run"));

    Pipeline trained = build_pipeline(cfg);
    load_checkpoint(run.last_checkpoint, trained, nullptr);
    const Pipeline init = build_pipeline(cfg);

    const auto trained_heat = trained.heatmap->parameters();
    const auto init_heat = init.heatmap->parameters();
    ASSERT_EQ(trained_heat.size(), init_heat.size());
    for (std::size_t i = 0; i < trained_heat.size(); ++i) {
        for (std::size_t j = 0; j < trained_heat[i]->value.numel(); ++j) {
            ASSERT_EQ(trained_heat[i]->value[j], init_heat[i]->value[j])
                << trained_heat[i]->name;
        }
    }

    const auto trained_gaze = trained.gaze->parameters();
    const auto init_gaze = init.gaze->parameters();
    bool gaze_changed = false;
    for (std::size_t i = 0; i < trained_gaze.size() && !gaze_changed; ++i) {
        for (std::size_t j = 0; j < trained_gaze[i]->value.numel(); ++j) {
            if (trained_gaze[i]->value[j] != init_gaze[i]->value[j]) {
                gaze_changed = true;
                break;
            }
        }
    }
    EXPECT_TRUE(gaze_changed);
}

TEST(Training, WarmStartLoadsGazeStageWeights) {
    const Corpus& corpus = Corpus::get();
    TrainConfig cfg = tiny_config();
    const TrainResult stage1 =
        train_gaze_stage(corpus.train(), corpus.val(), cfg, corpus.dir("warm_stage1"));

    TrainConfig frozen = cfg;
    frozen.full_stage.lr = 1e-12;
    frozen.full_stage.weight_decay = 0.0;
    const TrainResult stage2 = train_full(corpus.train(), corpus.val(), frozen,
                                          corpus.dir("warm_stage2"), stage1.best_checkpoint);

    Pipeline warm = build_pipeline(cfg);
    load_checkpoint(stage2.last_checkpoint, warm, nullptr);
    Pipeline reference = build_pipeline(cfg);
    load_checkpoint(stage1.best_checkpoint, reference, nullptr);

    const auto warm_gaze = warm.gaze->parameters();
    const auto ref_gaze = reference.gaze->parameters();
    double max_diff = 0.0;
    for (std::size_t i = 0; i < warm_gaze.size(); ++i) {
        for (std::size_t j = 0; j < warm_gaze[i]->value.numel(); ++j) {
            max_diff = std::max(max_diff,
                                std::abs(warm_gaze[i]->value[j] - ref_gaze[i]->value[j]));
        }
    }
    EXPECT_LT(max_diff, 1e-9);

    const Pipeline cold = build_pipeline(cfg);
    const auto cold_gaze = cold.gaze->parameters();
    double diff_from_cold = 0.0;
    for (std::size_t i = 0; i < warm_gaze.size(); ++i) {
        for (std::size_t j = 0; j < warm_gaze[i]->value.numel(); ++j) {
            diff_from_cold = std::max(
                diff_from_cold, std::abs(warm_gaze[i]->value[j] - cold_gaze[i]->value[j]));
        }
    }
    EXPECT_GT(diff_from_cold, 1e-6);
}

TEST(Training, NonFiniteLossAbortsWithSnapshot) {
    const Corpus& corpus = Corpus::get();
    TrainConfig cfg = tiny_config();

    Pipeline poisoned = build_pipeline(cfg);
    poisoned.gaze->parameters().back()->value[0] = std::numeric_limits<double>::quiet_NaN();
    const std::string bad_ckpt = corpus.dir("poisoned.ckpt");
    save_checkpoint(bad_ckpt, poisoned, nullptr, "");

    const std::string run_dir = corpus.dir("diverge_run");
    try {
        train_full(corpus.train(), corpus.val(), cfg, run_dir, bad_ckpt);
        FAIL() << "expected TrainError";
    } catch (const TrainError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
    }
    EXPECT_TRUE(fs::exists(fs::path(run_dir) / "diverged.ckpt"));
}

TEST(Training, RejectsEmptyTrainingManifest) {
    const Corpus& corpus = Corpus::get();
    data::DatasetManifest empty;
    empty.split = "train";
    EXPECT_THROW(train_gaze_stage(empty, corpus.val(), tiny_config(), corpus.dir("e1")),
                 TrainError);
    EXPECT_THROW(train_full(empty, corpus.val(), tiny_config(), corpus.dir("e2")),
                 TrainError);
}

TEST(Evaluate, MeanAngleMatchesFullEvaluation) {
    const Corpus& corpus = Corpus::get();
    const TrainConfig cfg = tiny_config();
    Pipeline models = build_pipeline(cfg);
    const EvalOutcome out = evaluate(corpus.val(), models, cfg);
    const double angle = mean_angle_error(corpus.val(), *models.gaze, cfg);
    EXPECT_NEAR(out.means.angle_error, angle, 1e-9);
}

TEST(Evaluate, CountsFailedSamplesWithoutAborting) {
    data::SynthConfig synth;
    synth.count = 4;
    synth.out_dir = (fs::temp_directory_path() / "gaze3d_test_eval_fail").string();
    fs::remove_all(synth.out_dir);
    const data::DatasetManifest manifest = data::synth_generate(synth, 93);

    geometry::DepthMap dead;
    dead.values = Grid(data::kSceneSize, data::kSceneSize, 0.0);
    data::write_depth_png(
        (fs::path(manifest.root) / manifest.records[2].depth_path).string(), dead);

    const TrainConfig cfg = tiny_config();
    Pipeline models = build_pipeline(cfg);
    Warnings warnings;
    const EvalOutcome out = evaluate(manifest, models, cfg);
    EXPECT_EQ(out.failures, 1u);
    EXPECT_EQ(out.per_sample.size(), 3u);
    EXPECT_TRUE(std::isfinite(out.means.dist_3d));
    fs::remove_all(synth.out_dir);
}

TEST(Baselines, RandomSitsInChanceBandAndIsSeeded) {
    const Corpus& corpus = Corpus::get();
    const EvalOutcome a = baseline_random(corpus.train(), 7);
    const EvalOutcome b = baseline_random(corpus.train(), 7);
    const EvalOutcome c = baseline_random(corpus.train(), 8);
    ASSERT_EQ(a.per_sample.size(), corpus.train().size());
    EXPECT_EQ(a.failures, 0u);
    EXPECT_EQ(a.means.auc, b.means.auc);
    EXPECT_EQ(a.means.dist_3d, b.means.dist_3d);
    EXPECT_NE(a.means.auc, c.means.auc);
    EXPECT_GT(a.means.auc, 0.25);
    EXPECT_LT(a.means.auc, 0.75);
    EXPECT_GT(a.means.dist_3d, 0.0);
}

TEST(Baselines, CenterIsDeterministicAndBounded) {
    const Corpus& corpus = Corpus::get();
    const EvalOutcome a = baseline_center(corpus.train());
    const EvalOutcome b = baseline_center(corpus.train());
    ASSERT_EQ(a.per_sample.size(), corpus.train().size());
    EXPECT_EQ(a.means.dist_2d, b.means.dist_2d);
    EXPECT_EQ(a.means.auc, b.means.auc);
    EXPECT_GT(a.means.auc, 0.0);
    EXPECT_LT(a.means.auc, 1.0);
    EXPECT_LT(a.means.dist_2d, 0.75);
    EXPECT_GT(a.means.dist_3d, 0.0);
}

}  // namespace
}  // namespace gaze3d::training
