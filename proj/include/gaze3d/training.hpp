// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0
//
// Training regimes, the evaluation loop, the Random/Center reference rows,
// and run-directory bookkeeping (config snapshot, epoch log, checkpoints).

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <gaze3d/config.hpp>
#include <gaze3d/data.hpp>
#include <gaze3d/models.hpp>
#include <gaze3d/nn/adam.hpp>
#include <gaze3d/supervision.hpp>

namespace gaze3d::training {

enum class Regime { kMultiStage, kEndToEnd };
enum class ModelPreset { kTiny, kFull };

struct StageConfig {
    int epochs = 0;
    int batch = 0;
    double lr = 1e-4;
    double weight_decay = 1e-4;
};

/// Experiment configuration, mirrored one-to-one by the flat config file
/// schema (see TrainConfig::to_text for the key list).
struct TrainConfig {
    Regime regime = Regime::kMultiStage;
    ModelPreset preset = ModelPreset::kFull;
    StageConfig gaze_stage{30, 128, 1e-4, 1e-4};
    StageConfig full_stage{50, 32, 1e-4, 1e-4};
    supervision::LossWeights loss;
    std::uint64_t seed = 0;
    bool use_full_body = false;   // ablation: 17 joints instead of 13
    bool blur_faces = true;       // privacy mode
    bool augment = false;         // full stage only
    double grad_clip = 0.0;       // global-norm clip, 0 disables
    int depth_size = 224;         // depth-branch input side

    void validate() const;

    /// Consumes the map (including config_version) and rejects leftovers.
    static TrainConfig from_map(config::ConfigMap& map);
    /// Loads a config file and applies "key=value" overrides on top.
    static TrainConfig load(const std::string& path,
                            const std::vector<std::string>& overrides);
    /// Defaults plus overrides, without a file.
    static TrainConfig from_overrides(const std::vector<std::string>& overrides);

    /// Round-trippable snapshot in the file schema.
    std::string to_text() const;
};

/// The two networks plus everything needed to step them together.
struct Pipeline {
    std::unique_ptr<models::GazeNet> gaze;
    std::unique_ptr<models::HeatmapNet> heatmap;

    std::vector<nn::Param*> parameters() const;
    std::vector<nn::Buffer*> buffers() const;
};

/// Instantiates both networks for the configured preset, seeded from
/// cfg.seed so runs are reproducible.
Pipeline build_pipeline(const TrainConfig& cfg);

/// Checkpoint archive helpers. The archive carries both networks' state,
/// optionally the optimizer moments (prefix "opt."), and a metadata string
/// of "key=value" lines including the stage tag and model preset. Loading
/// into a mismatched preset fails with a shape error naming the entry.
void save_checkpoint(const std::string& path, const Pipeline& models, const nn::Adam* optimizer,
                     const std::string& metadata);
std::string load_checkpoint(const std::string& path, Pipeline& models, nn::Adam* optimizer);

struct TrainResult {
    std::string best_checkpoint;
    std::string last_checkpoint;
    std::vector<std::string> log_lines;  // one "key=value ..." record per epoch
    double best_value = 0.0;             // best validation angle or 3D distance
};

/// Stage 1: the gaze module alone under the cosine loss. Keeps the best
/// validation mean angle error. Divergence (non-finite loss) aborts with a
/// TrainError after writing a diagnostic snapshot into run_dir.
TrainResult train_gaze_stage(const data::DatasetManifest& train,
                             const data::DatasetManifest& val, const TrainConfig& cfg,
                             const std::string& run_dir);

/// Stage 2 / end-to-end: optimizes the combined loss through both networks,
/// with the field-of-view channels carrying the heatmap gradient back into
/// the gaze module. init_checkpoint (multi-stage regime) warm-starts the
/// gaze module. Keeps the best validation 3D distance.
TrainResult train_full(const data::DatasetManifest& train, const data::DatasetManifest& val,
                       const TrainConfig& cfg, const std::string& run_dir,
                       const std::string& init_checkpoint = "");

struct EvalOutcome {
    supervision::MetricReport means;
    std::vector<supervision::MetricReport> per_sample;
    std::size_t failures = 0;  // samples excluded because evaluation threw
};

/// Everything the pipeline produces for one sample at evaluation time.
struct SamplePrediction {
    Vec3 gaze = Vec3::Zero();
    geometry::FovHeatmaps fov;
    Grid heatmap;
    geometry::Retrieval3D retrieval;
};

/// Runs the full inference path (gaze, field-of-view maps, heatmap,
/// 3D retrieval) for a single sample in evaluation mode.
SamplePrediction predict_sample(const data::GazeSample& sample, Pipeline& models,
                                const TrainConfig& cfg);

/// Full evaluation pass: predicted gaze, field-of-view maps, heatmap,
/// 3D retrieval, then all four metrics per sample. Failures are counted
/// and excluded from the means, never silently dropped.
EvalOutcome evaluate(const data::DatasetManifest& manifest, Pipeline& models,
                     const TrainConfig& cfg);

/// Mean validation angle error of the gaze module alone (stage-1 metric).
double mean_angle_error(const data::DatasetManifest& manifest, models::GazeNet& gaze,
                        const TrainConfig& cfg);

/// Reference rows. Random scores every cell uniformly at random, picks a
/// uniform valid cloud point and a uniform random gaze direction. Center
/// scores a centered Gaussian, picks the valid point nearest the cloud
/// centroid, and gazes from the eye toward it.
EvalOutcome baseline_random(const data::DatasetManifest& manifest, std::uint64_t seed,
                            bool blur_faces = true);
EvalOutcome baseline_center(const data::DatasetManifest& manifest, bool blur_faces = true);

}  // namespace gaze3d::training
