// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <gaze3d/data.hpp>
#include <gaze3d/geometry.hpp>
#include <gaze3d/training.hpp>

namespace fs = std::filesystem;
using namespace gaze3d;

namespace {

training::TrainConfig resolve_config(const std::string& config_path,
                                     std::vector<std::string> overrides,
                                     const std::optional<std::uint64_t>& seed,
                                     const std::string& regime) {
    if (!regime.empty()) {
        overrides.push_back("regime=" + regime);
    }
    if (seed.has_value()) {
        overrides.push_back("seed=" + std::to_string(*seed));
    }
    if (config_path.empty()) {
        return training::TrainConfig::from_overrides(overrides);
    }
    return training::TrainConfig::load(config_path, overrides);
}

int cmd_synth(const std::string& out_dir, int count, std::uint64_t seed,
              const std::string& split) {
    data::SynthConfig cfg;
    cfg.count = count;
    cfg.out_dir = out_dir;
    cfg.split = split;
    const data::DatasetManifest manifest = data::synth_generate(cfg, seed);
    std::printf("count=%zu\n", manifest.size());
    std::printf("manifest=%s\n", (fs::path(out_dir) / "manifest.jsonl").string().c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::optional<std::uint64_t>& seed, const std::string& regime,
              const std::vector<std::string>& manifests, const std::string& out_dir) {
    const training::TrainConfig cfg = resolve_config(config_path, overrides, seed, regime);
    if (manifests.empty() || manifests.size() > 2) {
        throw ConfigError("train: pass --manifest TRAIN [--manifest VAL]");
    }
    const data::DatasetManifest train = data::load_manifest(manifests[0]);
    const data::DatasetManifest val =
        manifests.size() == 2 ? data::load_manifest(manifests[1]) : train;

    training::TrainResult result;
    if (cfg.regime == training::Regime::kMultiStage) {
        const training::TrainResult stage1 = training::train_gaze_stage(
            train, val, cfg, (fs::path(out_dir) / "stage1").string());
        std::printf("stage1_best_checkpoint=%s\n", stage1.best_checkpoint.c_str());
        std::printf("stage1_best_value=%.9g\n", stage1.best_value);
        result = training::train_full(train, val, cfg,
                                      (fs::path(out_dir) / "stage2").string(),
                                      stage1.best_checkpoint);
    } else {
        result = training::train_full(train, val, cfg, out_dir);
    }
    std::printf("best_checkpoint=%s\n", result.best_checkpoint.c_str());
    std::printf("last_checkpoint=%s\n", result.last_checkpoint.c_str());
    std::printf("best_value=%.9g\n", result.best_value);
    return 0;
}

cv::Mat scene_bgr(const ImageU8& scene) {
    cv::Mat bgr(scene.height, scene.width, CV_8UC3);
    for (int r = 0; r < scene.height; ++r) {
        for (int c = 0; c < scene.width; ++c) {
            auto& px = bgr.at<cv::Vec3b>(r, c);
            px[0] = scene.at(r, c, 2);
            px[1] = scene.at(r, c, 1);
            px[2] = scene.at(r, c, 0);
        }
    }
    return bgr;
}

const cv::Scalar kPredColor(255, 64, 0);  // blue
const cv::Scalar kGtColor(0, 0, 255);     // red

cv::Mat panel_targets(const data::GazeSample& s, const training::SamplePrediction& pred) {
    cv::Mat panel = scene_bgr(s.scene);
    const cv::Point gt(static_cast<int>(std::lround(s.gt_target_2d.x() * s.scene.width - 0.5)),
                       static_cast<int>(std::lround(s.gt_target_2d.y() * s.scene.height - 0.5)));
    const cv::Point pr(static_cast<int>(std::lround(pred.retrieval.target_2d.x())),
                       static_cast<int>(std::lround(pred.retrieval.target_2d.y())));
    cv::circle(panel, gt, 6, kGtColor, 2, cv::LINE_AA);
    cv::circle(panel, pr, 6, kPredColor, 2, cv::LINE_AA);
    cv::line(panel, gt, pr, cv::Scalar(255, 255, 255), 1, cv::LINE_AA);
    return panel;
}

cv::Mat panel_vhat(const data::GazeSample& s, const training::SamplePrediction& pred) {
    cv::Mat gray(s.scene.height, s.scene.width, CV_8UC1);
    cv::Mat vhat(s.scene.height, s.scene.width, CV_8UC1);
    for (int r = 0; r < s.scene.height; ++r) {
        for (int c = 0; c < s.scene.width; ++c) {
            gray.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(
                std::lround(0.299 * s.scene.at(r, c, 0) + 0.587 * s.scene.at(r, c, 1) +
                            0.114 * s.scene.at(r, c, 2)));
            vhat.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(
                std::lround(255.0 * std::clamp(pred.fov.v_hat.at(r, c), 0.0, 1.0)));
        }
    }
    cv::Mat colored;
    cv::applyColorMap(vhat, colored, cv::COLORMAP_JET);
    cv::Mat gray3;
    cv::cvtColor(gray, gray3, cv::COLOR_GRAY2BGR);
    cv::Mat panel;
    cv::addWeighted(gray3, 0.45, colored, 0.55, 0.0, panel);
    return panel;
}

void draw_ray(cv::Mat& panel, const Vec3& eye, const Vec3& dir, double length,
              const geometry::CameraIntrinsics& k, const cv::Scalar& color) {
    std::optional<cv::Point> prev;
    for (double t = 0.0; t <= length; t += length / 50.0) {
        const Vec3 p = eye + t * dir;
        if (p.z() <= 1e-6) {
            prev.reset();
            continue;
        }
        const Vec2 uv = geometry::project(p, k);
        const cv::Point pt(static_cast<int>(std::lround(uv.x())),
                           static_cast<int>(std::lround(uv.y())));
        if (prev.has_value()) {
            cv::line(panel, *prev, pt, color, 2, cv::LINE_AA);
        }
        prev = pt;
    }
}

cv::Mat panel_cloud(const data::GazeSample& s, const training::SamplePrediction& pred) {
    const geometry::PointCloud cloud = geometry::unproject(s.depth, s.intrinsics);
    double z_max = 0.0;
    for (int r = 0; r < cloud.height; ++r) {
        for (int c = 0; c < cloud.width; ++c) {
            if (cloud.is_valid(r, c)) z_max = std::max(z_max, cloud.at(r, c).z());
        }
    }
    cv::Mat panel(cloud.height, cloud.width, CV_8UC3, cv::Scalar(0, 0, 0));
    for (int r = 0; r < cloud.height; ++r) {
        for (int c = 0; c < cloud.width; ++c) {
            if (!cloud.is_valid(r, c)) continue;
            const double z = cloud.at(r, c).z();
            const auto shade =
                static_cast<std::uint8_t>(std::lround(60.0 + 180.0 * (1.0 - z / z_max)));
            panel.at<cv::Vec3b>(r, c) = cv::Vec3b(shade, shade, shade);
        }
    }
    const double gt_len = (s.gt_target_3d - s.eye_3d).norm();
    draw_ray(panel, s.eye_3d, s.gt_gaze.dir, gt_len, s.intrinsics, kGtColor);
    const double pred_len = (pred.retrieval.target_3d - s.eye_3d).norm();
    draw_ray(panel, s.eye_3d, pred.gaze, std::max(pred_len, gt_len), s.intrinsics,
             kPredColor);
    const Vec2 eye_uv = geometry::project(s.eye_3d, s.intrinsics);
    cv::circle(panel,
               cv::Point(static_cast<int>(std::lround(eye_uv.x())),
                         static_cast<int>(std::lround(eye_uv.y()))),
               4, cv::Scalar(0, 255, 255), cv::FILLED, cv::LINE_AA);
    return panel;
}

void write_figure(const std::string& path, const data::GazeSample& s,
                  const training::SamplePrediction& pred) {
    std::vector<cv::Mat> panels{panel_targets(s, pred), panel_vhat(s, pred),
                                panel_cloud(s, pred)};
    cv::Mat figure;
    cv::hconcat(panels, figure);
    if (!cv::imwrite(path, figure)) {
        throw DataError("viz: could not write " + path);
    }
}

void print_report(const supervision::MetricReport& means, std::size_t count,
                  std::size_t failures) {
    std::printf("count=%zu\n", count);
    std::printf("failures=%zu\n", failures);
    std::printf("%s\n", means.to_record().c_str());
}

void write_report(const std::string& path, const supervision::MetricReport& means,
                  std::size_t count, std::size_t failures) {
    std::ofstream out(path);
    out << "count=" << count << "\n";
    out << "failures=" << failures << "\n";
    out << means.to_record() << "\n";
    if (!out) {
        throw DataError("eval: could not write " + path);
    }
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::optional<std::uint64_t>& seed, const std::string& manifest_path,
             const std::string& checkpoint, const std::string& baseline,
             const std::string& out_dir, bool viz) {
    const training::TrainConfig cfg = resolve_config(config_path, overrides, seed, "");
    const data::DatasetManifest manifest = data::load_manifest(manifest_path);

    training::EvalOutcome outcome;
    std::optional<training::Pipeline> models;
    if (!baseline.empty()) {
        if (viz) {
            throw ConfigError("eval: --viz requires a model checkpoint, not a baseline");
        }
        if (baseline == "random") {
            outcome = training::baseline_random(manifest, cfg.seed, cfg.blur_faces);
        } else if (baseline == "center") {
            outcome = training::baseline_center(manifest, cfg.blur_faces);
        } else {
            throw ConfigError("eval: unknown baseline '" + baseline +
                              "' (expected random or center)");
        }
    } else {
        if (checkpoint.empty()) {
            throw ConfigError("eval: pass --checkpoint or --baseline");
        }
        models = training::build_pipeline(cfg);
        training::load_checkpoint(checkpoint, *models, nullptr);
        outcome = training::evaluate(manifest, *models, cfg);
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_report((fs::path(out_dir) / "metrics.txt").string(), outcome.means,
                     outcome.per_sample.size(), outcome.failures);
    }
    if (viz) {
        if (out_dir.empty()) {
            throw ConfigError("eval: --viz needs --out for the figure files");
        }
        for (std::size_t i = 0; i < manifest.size(); ++i) {
            const data::GazeSample s = data::load_sample(manifest, i, cfg.blur_faces);
            const training::SamplePrediction pred =
                training::predict_sample(s, *models, cfg);
            char name[32];
            std::snprintf(name, sizeof(name), "viz_%04zu.png", i);
            write_figure((fs::path(out_dir) / name).string(), s, pred);
        }
        std::printf("figures=%zu\n", manifest.size());
    }
    print_report(outcome.means, outcome.per_sample.size(), outcome.failures);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Privacy-preserving 3D gaze target estimation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    std::string synth_out;
    std::string synth_split = "train";
    int synth_count = 64;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--count", synth_count, "Number of samples");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--split", synth_split, "Split tag for the manifest");

    auto* train = app.add_subcommand("train", "Train the pipeline");
    std::vector<std::string> train_manifests;
    std::string train_out;
    std::string regime;
    train->add_option("--config", config_path, "Config file");
    train->add_option("--set", overrides, "Config override key=value");
    train->add_option("--seed", seed, "Seed override");
    train->add_option("--regime", regime, "multi-stage or end-to-end");
    train->add_option("--manifest", train_manifests, "Train manifest, then optional val")
        ->required();
    train->add_option("--out", train_out, "Run directory")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or baseline");
    std::string eval_manifest;
    std::string eval_checkpoint;
    std::string eval_baseline;
    std::string eval_out;
    bool viz = false;
    eval->add_option("--config", config_path, "Config file");
    eval->add_option("--set", overrides, "Config override key=value");
    eval->add_option("--seed", seed, "Seed override");
    eval->add_option("--manifest", eval_manifest, "Manifest to evaluate")->required();
    eval->add_option("--checkpoint", eval_checkpoint, "Model checkpoint");
    eval->add_option("--baseline", eval_baseline, "random or center");
    eval->add_option("--out", eval_out, "Directory for metrics.txt and figures");
    eval->add_flag("--viz", viz, "Write one figure per sample");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_out, synth_count, synth_seed, synth_split);
        }
        if (train->parsed()) {
            return cmd_train(config_path, overrides, seed, regime, train_manifests,
                             train_out);
        }
        return cmd_eval(config_path, overrides, seed, eval_manifest, eval_checkpoint,
                        eval_baseline, eval_out, viz);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
