/*
 * Copyright (c) 2026, The geochip Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Per-pixel logistic water classifier over the preprocessed channels, an
// NDWI threshold baseline, SGD training and confusion-matrix metrics.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "geochip/datasets.hpp"
#include "geochip/samplers.hpp"
#include "geochip/transforms.hpp"

namespace geochip {

inline constexpr int kModelVersion = 1;
inline constexpr int kMetricsVersion = 1;

struct ModelWeights {
    std::vector<std::string> channels;
    std::vector<double> w;
    double b = 0.0;

    std::size_t size() const noexcept { return w.size(); }
    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t chips_per_epoch = 130;
    double lr = 0.01;
    std::uint64_t seed = 0;
    std::size_t batch_size = 8;
    std::size_t chip_px = 512;

    /// Throws Error(InvalidArgument). epochs may be 0.
    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct MetricsReport {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    double overall_accuracy() const noexcept;
    /// tp / (tp + fp + fn), 1 when the denominator is 0.
    double iou_water() const noexcept;

    void add(bool predicted_water, bool true_water) noexcept;
    void merge(const MetricsReport& o) noexcept;
    nlohmann::json to_json() const;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// w ~ U[-1/sqrt(C), 1/sqrt(C)], b = 0. Throws Error(InvalidArgument) for C = 0.
ModelWeights init_model(std::size_t channels, std::uint64_t seed,
                        std::vector<std::string> names = {});

/// Throws Error(ShapeMismatch) when channel counts differ.
Plane<double> predict_logits(const ModelWeights& m, const Image& image);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
    std::uint64_t count = 0;
};

/// Mean BCE over valid pixels of model-ready samples (images already
/// preprocessed) and its exact gradient. Throws Error(NoValidPixels),
/// Error(NonBinaryMask) or Error(ShapeMismatch).
LossGrad loss_and_grad(const ModelWeights& m, std::span<const Sample> samples);
LossGrad loss_and_grad(const ModelWeights& m, const Batch& batch);

struct TrainResult {
    ModelWeights weights;
    std::vector<double> epoch_loss;
};

/// Plain SGD. Epoch k draws cfg.chips_per_epoch chips from
/// random_sampler(seed = derive_seed(cfg.seed, "train/epoch/k")); batches whose
/// chips hold no valid pixel are skipped. Deterministic in (e, cfg, prep).
TrainResult train(const DatasetExpr& e, const TrainConfig& cfg, const Preprocess& prep);

/// Per-pixel water probability for the raw (unpreprocessed) sample; values
/// at invalid pixels are ignored by callers. Class = probability >= 0.5.
using Predictor = std::function<std::vector<double>(const Sample&)>;

Predictor logistic_predictor(ModelWeights m, Preprocess prep);
/// 1 where nd(green, nir) of the scaled image > tau, else 0.
Predictor ndwi_threshold_model(double tau = 0.0, BandSchema schema = {},
                               double reflectance_factor = kDefaultReflectanceFactor);
/// clamp(channel 0, 0, 1).
Predictor identity_predictor();
Predictor constant_predictor(double p);
/// The sample's own mask. Throws Error(InvalidArgument) on samples without one.
Predictor truth_predictor();

bool is_water(double probability) noexcept;

/// Confusion matrix over valid pixels of grid chips of e_val. Where flush
/// clamped or overlapping chips cover a pixel twice, only the chip whose
/// origin is the last one at or before the pixel counts it.
MetricsReport evaluate(const Predictor& predictor, const DatasetExpr& e_val,
                       std::size_t chip_px = 512, std::size_t stride_px = 512);

/// Everything needed to reuse a trained model.
struct ModelFile {
    ModelWeights weights;
    TrainConfig config;
    Preprocess prep;
    std::vector<double> epoch_loss;

    nlohmann::json to_json() const;
    static ModelFile from_json(const nlohmann::json& j);
};

void save_model(const std::filesystem::path& path, const ModelFile& m);
/// Throws Error(IoError) or Error(InvalidArgument).
ModelFile load_model(const std::filesystem::path& path);

}  // namespace geochip
