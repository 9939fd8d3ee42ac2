// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/training.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gaze3d/nn/checkpoint.hpp>

namespace gaze3d::training {

namespace fs = std::filesystem;
using data::GazeSample;
using nn::Tensor;

// ----------------------------------------------------------------- config

void TrainConfig::validate() const {
    for (const auto* stage : {&gaze_stage, &full_stage}) {
        if (stage->epochs <= 0) throw ConfigError("train: epochs must be positive");
        if (stage->batch <= 0) throw ConfigError("train: batch must be positive");
        if (stage->lr <= 0.0) throw ConfigError("train: lr must be positive");
        if (stage->weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    }
    loss.validate();
    if (grad_clip < 0.0) throw ConfigError("train: grad_clip must be >= 0");
    if (depth_size <= 0) throw ConfigError("train: depth_size must be positive");
}

namespace {

std::string normalized_token(std::string v) {
    std::replace(v.begin(), v.end(), '-', '_');
    return v;
}

Regime parse_regime(const std::string& v) {
    const std::string t = normalized_token(v);
    if (t == "multi_stage") return Regime::kMultiStage;
    if (t == "end_to_end") return Regime::kEndToEnd;
    throw ConfigError("config key 'regime': expected multi_stage or end_to_end, got '" + v +
                      "'");
}

ModelPreset parse_preset(const std::string& v) {
    if (v == "tiny") return ModelPreset::kTiny;
    if (v == "full") return ModelPreset::kFull;
    throw ConfigError("config key 'model.preset': expected tiny or full, got '" + v + "'");
}

void take_stage(config::ConfigMap& map, const std::string& prefix, StageConfig& stage) {
    stage.epochs = map.take_int(prefix + ".epochs", stage.epochs);
    stage.batch = map.take_int(prefix + ".batch", stage.batch);
    stage.lr = map.take_double(prefix + ".lr", stage.lr);
    stage.weight_decay = map.take_double(prefix + ".weight_decay", stage.weight_decay);
}

}  // namespace

TrainConfig TrainConfig::from_map(config::ConfigMap& map) {
    const int version = map.take_int("config_version", 1);
    if (version != 1) {
        throw ConfigError("config_version " + std::to_string(version) + " is not supported");
    }
    TrainConfig cfg;
    cfg.regime = parse_regime(map.take_string("regime", "multi_stage"));
    cfg.preset = parse_preset(map.take_string("model.preset", "full"));
    take_stage(map, "gaze_stage", cfg.gaze_stage);
    take_stage(map, "full_stage", cfg.full_stage);
    cfg.loss.w_heat = map.take_double("loss.w_heat", cfg.loss.w_heat);
    cfg.loss.w_gaze = map.take_double("loss.w_gaze", cfg.loss.w_gaze);
    cfg.seed = map.take_u64("seed", cfg.seed);
    cfg.use_full_body = map.take_bool("ablation.use_full_body", cfg.use_full_body);
    cfg.blur_faces = map.take_bool("ablation.blur_faces", cfg.blur_faces);
    cfg.augment = map.take_bool("train.augment", cfg.augment);
    cfg.grad_clip = map.take_double("train.grad_clip", cfg.grad_clip);
    cfg.depth_size = map.take_int("model.depth_size", cfg.depth_size);
    map.expect_consumed();
    cfg.validate();
    return cfg;
}

TrainConfig TrainConfig::load(const std::string& path,
                              const std::vector<std::string>& overrides) {
    config::ConfigMap map = config::ConfigMap::from_file(path);
    for (const std::string& o : overrides) {
        map.apply_override(o);
    }
    return from_map(map);
}

TrainConfig TrainConfig::from_overrides(const std::vector<std::string>& overrides) {
    config::ConfigMap map = config::ConfigMap::from_text("", "<defaults>");
    for (const std::string& o : overrides) {
        map.apply_override(o);
    }
    return from_map(map);
}

std::string TrainConfig::to_text() const {
    char buf[4096];
    std::snprintf(
        buf, sizeof(buf),
        "config_version = 1\n"
        "regime = %s\n"
        "model.preset = %s\n"
        "model.depth_size = %d\n"
        "seed = %llu\n"
        "gaze_stage.epochs = %d\ngaze_stage.batch = %d\n"
        "gaze_stage.lr = %.17g\ngaze_stage.weight_decay = %.17g\n"
        "full_stage.epochs = %d\nfull_stage.batch = %d\n"
        "full_stage.lr = %.17g\nfull_stage.weight_decay = %.17g\n"
        "loss.w_heat = %.17g\nloss.w_gaze = %.17g\n"
        "ablation.use_full_body = %s\nablation.blur_faces = %s\n"
        "train.augment = %s\ntrain.grad_clip = %.17g\n",
        regime == Regime::kMultiStage ? "multi_stage" : "end_to_end",
        preset == ModelPreset::kTiny ? "tiny" : "full", depth_size,
        static_cast<unsigned long long>(seed), gaze_stage.epochs, gaze_stage.batch,
        gaze_stage.lr, gaze_stage.weight_decay, full_stage.epochs, full_stage.batch,
        full_stage.lr, full_stage.weight_decay, loss.w_heat, loss.w_gaze,
        use_full_body ? "true" : "false", blur_faces ? "true" : "false",
        augment ? "true" : "false", grad_clip);
    return buf;
}

// ----------------------------------------------------------------- pipeline

std::vector<nn::Param*> Pipeline::parameters() const {
    std::vector<nn::Param*> out = gaze->parameters();
    const std::vector<nn::Param*> h = heatmap->parameters();
    out.insert(out.end(), h.begin(), h.end());
    return out;
}

std::vector<nn::Buffer*> Pipeline::buffers() const {
    std::vector<nn::Buffer*> out = gaze->buffers();
    const std::vector<nn::Buffer*> h = heatmap->buffers();
    out.insert(out.end(), h.begin(), h.end());
    return out;
}

Pipeline build_pipeline(const TrainConfig& cfg) {
    cfg.validate();
    Pipeline p;
    models::GazeNetConfig gcfg = cfg.preset == ModelPreset::kTiny
                                     ? models::GazeNetConfig::tiny()
                                     : models::GazeNetConfig::full();
    if (cfg.use_full_body) {
        gcfg.pose_input_dim = 2 * pose::kFullBodyJointCount;
    }
    models::HeatmapNetConfig hcfg = cfg.preset == ModelPreset::kTiny
                                        ? models::HeatmapNetConfig::tiny()
                                        : models::HeatmapNetConfig::full();
    p.gaze = std::make_unique<models::GazeNet>(gcfg, cfg.seed + 1);
    p.heatmap = std::make_unique<models::HeatmapNet>(hcfg, cfg.seed + 2);
    return p;
}

// ----------------------------------------------------------------- ckpt

void save_checkpoint(const std::string& path, const Pipeline& models, const nn::Adam* optimizer,
                     const std::string& metadata) {
    nn::TensorArchive archive;
    archive.metadata = metadata;
    models::save_state(archive, "", models.gaze->parameters(), models.gaze->buffers());
    models::save_state(archive, "", models.heatmap->parameters(), models.heatmap->buffers());
    if (optimizer != nullptr) {
        for (auto& [name, tensor] : const_cast<nn::Adam*>(optimizer)->state_entries()) {
            archive.put("opt." + name, *tensor);
        }
    }
    archive.save(path);
}

std::string load_checkpoint(const std::string& path, Pipeline& models, nn::Adam* optimizer) {
    const nn::TensorArchive archive = nn::TensorArchive::load(path);
    models::load_state(archive, "", models.gaze->parameters(), models.gaze->buffers());
    models::load_state(archive, "", models.heatmap->parameters(), models.heatmap->buffers());
    if (optimizer != nullptr) {
        for (auto& [name, tensor] : optimizer->state_entries()) {
            const Tensor& stored = archive.get("opt." + name);
            if (!stored.same_shape(*tensor)) {
                throw DataError("checkpoint " + path + ": optimizer entry '" + name +
                                "' has mismatched shape");
            }
            *tensor = stored;
        }
    }
    return archive.metadata;
}

// ----------------------------------------------------------------- helpers

namespace {

std::vector<GazeSample> load_all(const data::DatasetManifest& manifest, bool blur_faces) {
    std::vector<GazeSample> samples;
    samples.reserve(manifest.size());
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        samples.push_back(data::load_sample(manifest, i, blur_faces));
    }
    return samples;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    return x;
}

Vec3 gaze_row(const Tensor& ghat, int n) {
    return {ghat.at(n, 0), ghat.at(n, 1), ghat.at(n, 2)};
}

Grid grid_from_tensor(const Tensor& t, int n) {
    const int h = t.dim(2);
    const int w = t.dim(3);
    Grid g(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            g.at(r, c) = t.at(n, 0, r, c);
        }
    }
    return g;
}

double clip_gradients(const std::vector<nn::Param*>& params, double clip) {
    if (clip <= 0.0) {
        return 0.0;
    }
    double sq = 0.0;
    for (const nn::Param* p : params) {
        for (std::size_t i = 0; i < p->grad.numel(); ++i) {
            sq += p->grad[i] * p->grad[i];
        }
    }
    const double norm = std::sqrt(sq);
    if (norm > clip) {
        const double scale = clip / norm;
        for (nn::Param* p : params) {
            p->grad.scale_(scale);
        }
    }
    return norm;
}

struct RunLog {
    std::ofstream file;
    std::vector<std::string>* lines = nullptr;

    void add(const std::string& line) {
        lines->push_back(line);
        file << line << "\n";
        file.flush();
        std::fprintf(stderr, "%s\n", line.c_str());
    }
};

RunLog open_run(const std::string& run_dir, const TrainConfig& cfg,
                std::vector<std::string>& lines) {
    fs::create_directories(run_dir);
    std::ofstream cfg_out(fs::path(run_dir) / "config.txt");
    cfg_out << cfg.to_text();
    RunLog log;
    log.file.open(fs::path(run_dir) / "log.txt");
    log.lines = &lines;
    return log;
}

std::string metadata_text(const TrainConfig& cfg, const char* stage, int epoch, double best) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "stage=%s\npreset=%s\nepoch=%d\nbest=%.17g\nseed=%llu\n",
                  stage, cfg.preset == ModelPreset::kTiny ? "tiny" : "full", epoch, best,
                  static_cast<unsigned long long>(cfg.seed));
    return buf;
}

/// Training-set batches for one epoch: shuffled index order, fixed batch size.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count, int batch, nn::Rng& rng) {
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < count; start += batch) {
        const std::size_t end = std::min(count, start + batch);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

std::vector<GazeSample> gather(const std::vector<GazeSample>& samples,
                               const std::vector<std::size_t>& idx) {
    std::vector<GazeSample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(samples[i]);
    return out;
}

double mean_angle_on(const std::vector<GazeSample>& samples, models::GazeNet& gaze,
                     const TrainConfig& cfg) {
    if (samples.empty()) {
        return 0.0;
    }
    const Tensor pose = data::pose_input(samples, cfg.use_full_body);
    const Tensor depth = data::depth_input(samples, cfg.depth_size);
    const Tensor ghat = gaze.forward(pose, depth, false);
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sum += supervision::metric_angle_deg(samples[i].gt_gaze.dir,
                                             gaze_row(ghat, static_cast<int>(i)));
    }
    return sum / samples.size();
}

supervision::MetricReport eval_one(const GazeSample& s, Pipeline& models,
                                   const TrainConfig& cfg) {
    const SamplePrediction pred = predict_sample(s, models, cfg);

    supervision::MetricReport r;
    r.dist_3d = supervision::metric_dist3d(pred.retrieval.target_3d, s.gt_target_3d);
    r.angle_error = supervision::metric_angle_deg(s.gt_gaze.dir, pred.gaze);
    const int w = s.scene.width;
    const int hgt = s.scene.height;
    const int gt_u = std::clamp(
        static_cast<int>(std::lround(s.gt_target_2d.x() * w - 0.5)), 0, w - 1);
    const int gt_v = std::clamp(
        static_cast<int>(std::lround(s.gt_target_2d.y() * hgt - 0.5)), 0, hgt - 1);
    r.auc = supervision::metric_auc(pred.heatmap, gt_u, gt_v, w, hgt);
    r.dist_2d = supervision::metric_dist2d(pred.heatmap, s.gt_target_2d);
    return r;
}

EvalOutcome evaluate_samples(const std::vector<GazeSample>& samples, Pipeline& models,
                             const TrainConfig& cfg) {
    EvalOutcome out;
    supervision::MetricReport sums;
    for (const GazeSample& s : samples) {
        try {
            const supervision::MetricReport r = eval_one(s, models, cfg);
            out.per_sample.push_back(r);
            sums.dist_3d += r.dist_3d;
            sums.angle_error += r.angle_error;
            sums.auc += r.auc;
            sums.dist_2d += r.dist_2d;
        } catch (const std::exception& e) {
            ++out.failures;
            emit_warning(nullptr, std::string("evaluate: sample failed: ") + e.what());
        }
    }
    const double n = std::max<std::size_t>(out.per_sample.size(), 1);
    out.means.dist_3d = sums.dist_3d / n;
    out.means.angle_error = sums.angle_error / n;
    out.means.auc = sums.auc / n;
    out.means.dist_2d = sums.dist_2d / n;
    return out;
}

supervision::MetricReport mean_report(const std::vector<supervision::MetricReport>& rs) {
    supervision::MetricReport m;
    for (const auto& r : rs) {
        m.dist_3d += r.dist_3d;
        m.angle_error += r.angle_error;
        m.auc += r.auc;
        m.dist_2d += r.dist_2d;
    }
    const double n = std::max<std::size_t>(rs.size(), 1);
    m.dist_3d /= n;
    m.angle_error /= n;
    m.auc /= n;
    m.dist_2d /= n;
    return m;
}

}  // namespace

// ----------------------------------------------------------------- stage 1

TrainResult train_gaze_stage(const data::DatasetManifest& train,
                             const data::DatasetManifest& val, const TrainConfig& cfg,
                             const std::string& run_dir) {
    cfg.validate();
    if (train.size() == 0) {
        throw TrainError("train_gaze_stage: empty training manifest");
    }
    const std::vector<GazeSample> train_samples = load_all(train, cfg.blur_faces);
    const std::vector<GazeSample> val_samples = load_all(val, cfg.blur_faces);

    Pipeline models = build_pipeline(cfg);
    nn::AdamConfig opt_cfg;
    opt_cfg.lr = cfg.gaze_stage.lr;
    opt_cfg.weight_decay = cfg.gaze_stage.weight_decay;
    const std::vector<nn::Param*> params = models.gaze->parameters();
    nn::Adam opt(params, opt_cfg);

    TrainResult result;
    RunLog log = open_run(run_dir, cfg, result.log_lines);
    result.best_value = 1e30;
    result.best_checkpoint = (fs::path(run_dir) / "best.ckpt").string();
    result.last_checkpoint = (fs::path(run_dir) / "last.ckpt").string();

    nn::Rng shuffle_rng(mix_seed(cfg.seed, 101));
    for (int epoch = 1; epoch <= cfg.gaze_stage.epochs; ++epoch) {
        double loss_sum = 0.0;
        double angle_sum = 0.0;
        std::size_t seen = 0;
        for (const auto& idx : make_batches(train_samples.size(), cfg.gaze_stage.batch,
                                            shuffle_rng)) {
            const std::vector<GazeSample> batch = gather(train_samples, idx);
            const Tensor pose = data::pose_input(batch, cfg.use_full_body);
            const Tensor depth = data::depth_input(batch, cfg.depth_size);
            const Tensor ghat = models.gaze->forward(pose, depth, true);

            const int n = static_cast<int>(batch.size());
            Tensor grad({n, 3});
            double batch_loss = 0.0;
            for (int i = 0; i < n; ++i) {
                const Vec3& gt = batch[i].gt_gaze.dir;
                const Vec3 pred = gaze_row(ghat, i);
                batch_loss += 1.0 - gt.dot(pred);
                angle_sum += supervision::metric_angle_deg(gt, pred);
                for (int d = 0; d < 3; ++d) {
                    grad.at(i, d) = -gt[d] / n;
                }
            }
            batch_loss /= n;

            opt.zero_grad();
            models.gaze->backward(grad);
            clip_gradients(params, cfg.grad_clip);
            opt.step();

            loss_sum += batch_loss * n;
            seen += idx.size();
        }
        const double train_loss = loss_sum / seen;
        const double train_angle = angle_sum / seen;
        if (!std::isfinite(train_loss)) {
            const std::string snap = (fs::path(run_dir) / "diverged.ckpt").string();
            save_checkpoint(snap, models, &opt, metadata_text(cfg, "gaze", epoch, 0.0));
            throw TrainError("train_gaze_stage: non-finite loss at epoch " +
                             std::to_string(epoch) + "; snapshot at " + snap);
        }
        const double val_angle = mean_angle_on(val_samples, *models.gaze, cfg);

        char line[256];
        std::snprintf(line, sizeof(line),
                      "stage=gaze epoch=%d train_loss=%.9g train_angle=%.9g val_angle=%.9g",
                      epoch, train_loss, train_angle, val_angle);
        log.add(line);

        if (val_angle < result.best_value) {
            result.best_value = val_angle;
            save_checkpoint(result.best_checkpoint, models, &opt,
                            metadata_text(cfg, "gaze", epoch, val_angle));
        }
    }
    save_checkpoint(result.last_checkpoint, models, &opt,
                    metadata_text(cfg, "gaze", cfg.gaze_stage.epochs, result.best_value));
    return result;
}

// ----------------------------------------------------------------- stage 2

TrainResult train_full(const data::DatasetManifest& train, const data::DatasetManifest& val,
                       const TrainConfig& cfg, const std::string& run_dir,
                       const std::string& init_checkpoint) {
    cfg.validate();
    if (train.size() == 0) {
        throw TrainError("train_full: empty training manifest");
    }
    const std::vector<GazeSample> base_samples = load_all(train, cfg.blur_faces);
    const std::vector<GazeSample> val_samples = load_all(val, cfg.blur_faces);

    Pipeline models = build_pipeline(cfg);
    if (!init_checkpoint.empty()) {
        const nn::TensorArchive archive = nn::TensorArchive::load(init_checkpoint);
        models::load_state(archive, "", models.gaze->parameters(), models.gaze->buffers());
    }

    nn::AdamConfig opt_cfg;
    opt_cfg.lr = cfg.full_stage.lr;
    opt_cfg.weight_decay = cfg.full_stage.weight_decay;
    const std::vector<nn::Param*> params = models.parameters();
    nn::Adam opt(params, opt_cfg);

    TrainResult result;
    RunLog log = open_run(run_dir, cfg, result.log_lines);
    result.best_value = 1e30;
    result.best_checkpoint = (fs::path(run_dir) / "best.ckpt").string();
    result.last_checkpoint = (fs::path(run_dir) / "last.ckpt").string();

    const double alpha = geometry::kDefaultFovAlpha;
    nn::Rng shuffle_rng(mix_seed(cfg.seed, 202));

    for (int epoch = 1; epoch <= cfg.full_stage.epochs; ++epoch) {
        std::vector<GazeSample> train_samples;
        if (cfg.augment) {
            train_samples.reserve(base_samples.size());
            for (std::size_t i = 0; i < base_samples.size(); ++i) {
                train_samples.push_back(
                    data::augment(base_samples[i], mix_seed(cfg.seed, epoch * 100003 + i)));
            }
        }
        const std::vector<GazeSample>& epoch_samples =
            cfg.augment ? train_samples : base_samples;

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (const auto& idx : make_batches(epoch_samples.size(), cfg.full_stage.batch,
                                            shuffle_rng)) {
            const std::vector<GazeSample> batch = gather(epoch_samples, idx);
            const int n = static_cast<int>(batch.size());

            const Tensor pose = data::pose_input(batch, cfg.use_full_body);
            const Tensor depth = data::depth_input(batch, cfg.depth_size);
            const Tensor ghat = models.gaze->forward(pose, depth, true);

            std::vector<geometry::PointCloud> clouds;
            std::vector<geometry::FovHeatmaps> fovs;
            clouds.reserve(batch.size());
            fovs.reserve(batch.size());
            for (int i = 0; i < n; ++i) {
                clouds.push_back(geometry::unproject(batch[i].depth, batch[i].intrinsics));
                fovs.push_back(geometry::compute_fov_heatmaps(
                    clouds.back(), batch[i].eye_3d, geometry::GazeVector{gaze_row(ghat, i)}));
            }

            const Tensor x = data::heatmap_input(batch, fovs);
            const Tensor h = models.heatmap->forward(x, true);
            opt.zero_grad();

            const int hm = supervision::kHeatmapSize;
            const double cells = static_cast<double>(n) * hm * hm;
            Tensor grad_h(h.shape());
            double l_heat = 0.0;
            for (int i = 0; i < n; ++i) {
                const Vec2 cell(batch[i].gt_target_2d.x() * hm - 0.5,
                                batch[i].gt_target_2d.y() * hm - 0.5);
                const Grid gt = supervision::gaussian_gt_heatmap(cell);
                for (int r = 0; r < hm; ++r) {
                    for (int c = 0; c < hm; ++c) {
                        const double diff = h.at(i, 0, r, c) - gt.at(r, c);
                        l_heat += diff * diff;
                        grad_h.at(i, 0, r, c) = cfg.loss.w_heat * 2.0 * diff / cells;
                    }
                }
            }
            l_heat /= cells;

            const Tensor grad_x = models.heatmap->backward(grad_h);

            // Gaze gradient: the cosine-loss term plus the field-of-view
            // channels. V = u . ghat per valid pixel with u the unit
            // eye-to-point direction, so dV/dghat = u and
            // dVhat/dghat = alpha * max(V,0)^(alpha-1) * u.
            Tensor grad_g({n, 3});
            double l_gaze = 0.0;
            for (int i = 0; i < n; ++i) {
                const Vec3& gt = batch[i].gt_gaze.dir;
                const Vec3 pred = gaze_row(ghat, i);
                l_gaze += 1.0 - gt.dot(pred);
                Vec3 acc = -cfg.loss.w_gaze / n * gt;
                const geometry::PointCloud& cloud = clouds[i];
                const Grid& v_map = fovs[i].v;
                for (int r = 0; r < cloud.height; ++r) {
                    for (int c = 0; c < cloud.width; ++c) {
                        if (!cloud.is_valid(r, c)) continue;
                        const Vec3 d = cloud.at(r, c) - batch[i].eye_3d;
                        const double norm = d.norm();
                        if (norm < 1e-9) continue;
                        const double v = v_map.at(r, c);
                        double w = grad_x.at(i, 4, r, c);
                        if (v > 0.0) {
                            w += grad_x.at(i, 5, r, c) * alpha * std::pow(v, alpha - 1.0);
                        }
                        if (w != 0.0) {
                            acc += (w / norm) * d;
                        }
                    }
                }
                for (int dim = 0; dim < 3; ++dim) {
                    grad_g.at(i, dim) = acc[dim];
                }
            }
            l_gaze /= n;

            models.gaze->backward(grad_g);
            clip_gradients(params, cfg.grad_clip);
            opt.step();

            const double batch_loss = supervision::total_loss(l_heat, l_gaze, cfg.loss);
            loss_sum += batch_loss * n;
            seen += idx.size();
        }
        const double train_loss = loss_sum / seen;
        if (!std::isfinite(train_loss)) {
            const std::string snap = (fs::path(run_dir) / "diverged.ckpt").string();
            save_checkpoint(snap, models, &opt, metadata_text(cfg, "full", epoch, 0.0));
            throw TrainError("train_full: non-finite loss at epoch " + std::to_string(epoch) +
                             "; snapshot at " + snap);
        }

        const EvalOutcome val_out = evaluate_samples(val_samples, models, cfg);
        char line[512];
        std::snprintf(line, sizeof(line),
                      "stage=full epoch=%d train_loss=%.9g val_dist_3d=%.9g "
                      "val_angle_error=%.9g val_auc=%.9g val_dist_2d=%.9g val_failures=%zu",
                      epoch, train_loss, val_out.means.dist_3d, val_out.means.angle_error,
                      val_out.means.auc, val_out.means.dist_2d, val_out.failures);
        log.add(line);

        if (val_out.means.dist_3d < result.best_value) {
            result.best_value = val_out.means.dist_3d;
            save_checkpoint(result.best_checkpoint, models, &opt,
                            metadata_text(cfg, "full", epoch, result.best_value));
        }
    }
    save_checkpoint(result.last_checkpoint, models, &opt,
                    metadata_text(cfg, "full", cfg.full_stage.epochs, result.best_value));
    return result;
}

// ----------------------------------------------------------------- eval

SamplePrediction predict_sample(const data::GazeSample& sample, Pipeline& models,
                                const TrainConfig& cfg) {
    const std::vector<GazeSample> one{sample};
    const Tensor pose = data::pose_input(one, cfg.use_full_body);
    const Tensor depth = data::depth_input(one, cfg.depth_size);
    const Tensor ghat = models.gaze->forward(pose, depth, false);

    SamplePrediction pred;
    pred.gaze = gaze_row(ghat, 0);
    const geometry::PointCloud cloud = geometry::unproject(sample.depth, sample.intrinsics);
    const geometry::GazeVector gaze{pred.gaze};
    pred.fov = geometry::compute_fov_heatmaps(cloud, sample.eye_3d, gaze);
    const Tensor x = data::heatmap_input(one, {pred.fov});
    const Tensor h = models.heatmap->forward(x, false);
    pred.heatmap = grid_from_tensor(h, 0);
    pred.retrieval =
        geometry::retrieve_3d_target(pred.heatmap, cloud, sample.eye_3d, gaze);
    return pred;
}

EvalOutcome evaluate(const data::DatasetManifest& manifest, Pipeline& models,
                     const TrainConfig& cfg) {
    return evaluate_samples(load_all(manifest, cfg.blur_faces), models, cfg);
}

double mean_angle_error(const data::DatasetManifest& manifest, models::GazeNet& gaze,
                        const TrainConfig& cfg) {
    return mean_angle_on(load_all(manifest, cfg.blur_faces), gaze, cfg);
}

EvalOutcome baseline_random(const data::DatasetManifest& manifest, std::uint64_t seed,
                            bool blur_faces) {
    nn::Rng rng(mix_seed(seed, 303));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    EvalOutcome out;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const GazeSample s = data::load_sample(manifest, i, blur_faces);
        const geometry::PointCloud cloud = geometry::unproject(s.depth, s.intrinsics);

        Grid heat(supervision::kHeatmapSize, supervision::kHeatmapSize);
        for (int r = 0; r < heat.height(); ++r) {
            for (int c = 0; c < heat.width(); ++c) {
                heat.at(r, c) = uni(rng);
            }
        }

        Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
        while (dir.norm() < 1e-6) {
            dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
        }
        dir.normalize();

        std::vector<std::size_t> valid_idx;
        valid_idx.reserve(cloud.points.size());
        for (std::size_t p = 0; p < cloud.points.size(); ++p) {
            if (cloud.valid[p]) valid_idx.push_back(p);
        }
        if (valid_idx.empty()) {
            ++out.failures;
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, valid_idx.size() - 1);
        const Vec3 point = cloud.points[valid_idx[pick(rng)]];

        supervision::MetricReport r;
        r.dist_3d = supervision::metric_dist3d(point, s.gt_target_3d);
        r.angle_error = supervision::metric_angle_deg(s.gt_gaze.dir, dir);
        const int gt_u = std::clamp(
            static_cast<int>(std::lround(s.gt_target_2d.x() * s.scene.width - 0.5)), 0,
            s.scene.width - 1);
        const int gt_v = std::clamp(
            static_cast<int>(std::lround(s.gt_target_2d.y() * s.scene.height - 0.5)), 0,
            s.scene.height - 1);
        r.auc = supervision::metric_auc(heat, gt_u, gt_v, s.scene.width, s.scene.height);
        r.dist_2d = supervision::metric_dist2d(heat, s.gt_target_2d);
        out.per_sample.push_back(r);
    }
    out.means = mean_report(out.per_sample);
    return out;
}

EvalOutcome baseline_center(const data::DatasetManifest& manifest, bool blur_faces) {
    EvalOutcome out;
    const int hm = supervision::kHeatmapSize;
    const Grid heat = supervision::gaussian_gt_heatmap(
        Vec2(0.5 * hm - 0.5, 0.5 * hm - 0.5));

    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const GazeSample s = data::load_sample(manifest, i, blur_faces);
        const geometry::PointCloud cloud = geometry::unproject(s.depth, s.intrinsics);

        Vec3 centroid = Vec3::Zero();
        std::size_t valid = 0;
        for (std::size_t p = 0; p < cloud.points.size(); ++p) {
            if (cloud.valid[p]) {
                centroid += cloud.points[p];
                ++valid;
            }
        }
        if (valid == 0) {
            ++out.failures;
            continue;
        }
        centroid /= static_cast<double>(valid);
        Vec3 point = centroid;
        double best = 1e30;
        for (std::size_t p = 0; p < cloud.points.size(); ++p) {
            if (!cloud.valid[p]) continue;
            const double d = (cloud.points[p] - centroid).squaredNorm();
            if (d < best) {
                best = d;
                point = cloud.points[p];
            }
        }

        supervision::MetricReport r;
        r.dist_3d = supervision::metric_dist3d(point, s.gt_target_3d);
        r.angle_error = supervision::metric_angle_deg(s.gt_gaze.dir, point - s.eye_3d);
        const int gt_u = std::clamp(
            static_cast<int>(std::lround(s.gt_target_2d.x() * s.scene.width - 0.5)), 0,
            s.scene.width - 1);
        const int gt_v = std::clamp(
            static_cast<int>(std::lround(s.gt_target_2d.y() * s.scene.height - 0.5)), 0,
            s.scene.height - 1);
        r.auc = supervision::metric_auc(heat, gt_u, gt_v, s.scene.width, s.scene.height);
        r.dist_2d = supervision::metric_dist2d(heat, s.gt_target_2d);
        out.per_sample.push_back(r);
    }
    out.means = mean_report(out.per_sample);
    return out;
}

}  // namespace gaze3d::training
