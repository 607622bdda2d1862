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
#include "geochip/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "geochip/error.hpp"
#include "geochip/kernels.hpp"
#include "geochip/random.hpp"

namespace geochip {

using nlohmann::json;

void TrainConfig::validate() const {
    if (chips_per_epoch == 0 || batch_size == 0 || chip_px == 0)
        throw Error(ErrorCode::InvalidArgument, "chips per epoch, batch size and chip size must be >= 1");
    if (!(lr > 0) || !std::isfinite(lr))
        throw Error(ErrorCode::InvalidArgument, fmt::format("learning rate must be > 0, got {}", lr));
}

json TrainConfig::to_json() const {
    return {{"epochs", epochs},         {"chips_per_epoch", chips_per_epoch},
            {"lr", lr},                 {"seed", seed},
            {"batch_size", batch_size}, {"chip_px", chip_px}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.chips_per_epoch = j.at("chips_per_epoch").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.chip_px = j.at("chip_px").get<std::size_t>();
    return c;
}

double MetricsReport::overall_accuracy() const noexcept {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
}

double MetricsReport::iou_water() const noexcept {
    const std::uint64_t den = tp + fp + fn;
    return den == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(den);
}

void MetricsReport::add(bool predicted_water, bool true_water) noexcept {
    if (predicted_water)
        ++(true_water ? tp : fp);
    else
        ++(true_water ? fn : tn);
}

void MetricsReport::merge(const MetricsReport& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
}

json MetricsReport::to_json() const {
    return {{"version", kMetricsVersion},
            {"overall_accuracy", overall_accuracy()},
            {"iou_water", iou_water()},
            {"confusion", {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn}}},
            {"n_pixels", total()}};
}

ModelWeights init_model(std::size_t channels, std::uint64_t seed, std::vector<std::string> names) {
    if (channels == 0) throw Error(ErrorCode::InvalidArgument, "model needs at least one channel");
    if (!names.empty() && names.size() != channels)
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("{} channel names for {} channels", names.size(), channels));
    ModelWeights m;
    m.channels = names.empty() ? std::vector<std::string>(channels) : std::move(names);
    for (std::size_t c = 0; c < channels; ++c)
        if (m.channels[c].empty()) m.channels[c] = fmt::format("band{}", c);
    const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
    Rng rng(seed);
    m.w.resize(channels);
    for (double& v : m.w) v = rng.uniform(-bound, bound);
    return m;
}

Plane<double> predict_logits(const ModelWeights& m, const Image& image) {
    if (image.channels != m.size())
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("model has {} channels, image {}", m.size(), image.channels));
    Plane<double> out(image.height, image.width);
    kernels::logits(image, m.w, m.b, out.data);
    return out;
}

LossGrad loss_and_grad(const ModelWeights& m, std::span<const Sample> samples) {
    LossGrad out;
    out.grad_w.assign(m.size(), 0.0);
    for (const Sample& s : samples) {
        if (s.image.channels != m.size())
            throw Error(ErrorCode::ShapeMismatch,
                        fmt::format("model has {} channels, sample {}", m.size(), s.image.channels));
        if (!s.mask) throw Error(ErrorCode::InvalidArgument, "training sample has no mask");
        for (std::size_t t = 0; t < s.validity.size(); ++t)
            if (s.validity.data[t] && s.mask->data[t] != 0 && s.mask->data[t] != 1)
                throw Error(ErrorCode::NonBinaryMask,
                            fmt::format("mask value {} at a valid pixel", s.mask->data[t]));
        const auto sums = kernels::loss_and_grad(s.image, *s.mask, s.validity, m.w, m.b);
        out.loss += sums.loss;
        for (std::size_t c = 0; c < m.size(); ++c) out.grad_w[c] += sums.grad[c];
        out.grad_b += sums.grad[m.size()];
        out.count += sums.count;
    }
    if (out.count == 0) throw Error(ErrorCode::NoValidPixels, "batch has no valid labelled pixel");
    const double inv = 1.0 / static_cast<double>(out.count);
    out.loss *= inv;
    for (double& g : out.grad_w) g *= inv;
    out.grad_b *= inv;
    return out;
}

LossGrad loss_and_grad(const ModelWeights& m, const Batch& batch) {
    if (!batch.masks) throw Error(ErrorCode::InvalidArgument, "batch has no masks");
    std::vector<Sample> samples(batch.n);
    for (std::size_t i = 0; i < batch.n; ++i) {
        samples[i].image = batch.image(i);
        samples[i].mask = batch.mask(i);
        samples[i].validity = batch.valid(i);
        samples[i].bbox = batch.bboxes[i];
    }
    return loss_and_grad(m, samples);
}

TrainResult train(const DatasetExpr& e, const TrainConfig& cfg, const Preprocess& prep) {
    cfg.validate();
    if (!e.has_mask()) throw Error(ErrorCode::InvalidArgument, "training data needs a mask layer");
    const std::size_t channels = prep.stats.channels();
    if (channels != prep.schema.size() + default_indices().size())
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("stats cover {} channels, model input has {}", channels,
                                prep.schema.size() + default_indices().size()));
    TrainResult r;
    r.weights = init_model(channels, derive_seed(cfg.seed, "train/init"), prep.schema.channel_names());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto boxes = random_sampler(e, ChipSpec{cfg.chip_px}, cfg.chips_per_epoch,
                                          derive_seed(cfg.seed, fmt::format("train/epoch/{}", epoch)));
        double loss_sum = 0.0;
        std::uint64_t pixels = 0;
        for (std::size_t i = 0; i < boxes.size(); i += cfg.batch_size) {
            const auto chunk =
                std::span(boxes).subspan(i, std::min(cfg.batch_size, boxes.size() - i));
            auto samples = materialize_all(e, chunk);
            for (Sample& s : samples) s.image = preprocess(s, prep);
            LossGrad lg;
            try {
                lg = loss_and_grad(r.weights, samples);
            } catch (const Error& err) {
                if (err.code() != ErrorCode::NoValidPixels) throw;
                spdlog::debug("epoch {} batch {}: no valid pixels, skipped", epoch, i / cfg.batch_size);
                continue;
            }
            for (std::size_t c = 0; c < channels; ++c) r.weights.w[c] -= cfg.lr * lg.grad_w[c];
            r.weights.b -= cfg.lr * lg.grad_b;
            loss_sum += lg.loss * static_cast<double>(lg.count);
            pixels += lg.count;
        }
        r.epoch_loss.push_back(pixels ? loss_sum / static_cast<double>(pixels) : 0.0);
        spdlog::info("epoch {}/{} loss {:.6f}", epoch + 1, cfg.epochs, r.epoch_loss.back());
    }
    return r;
}

bool is_water(double probability) noexcept { return probability >= 0.5; }

Predictor logistic_predictor(ModelWeights m, Preprocess prep) {
    return [m = std::move(m), prep = std::move(prep)](const Sample& s) {
        const Image x = preprocess(s, prep);
        auto z = predict_logits(m, x).data;
        for (double& v : z) v = kernels::sigmoid(v);
        return z;
    };
}

Predictor ndwi_threshold_model(double tau, BandSchema schema, double reflectance_factor) {
    schema.index("green");
    schema.index("nir");
    return [tau, schema = std::move(schema), reflectance_factor](const Sample& s) {
        Image img = s.image;
        scale_reflectance(img, s.validity, reflectance_factor);
        auto nd = normalized_difference(img, schema, "green", "nir").data;
        for (double& v : nd) v = v > tau ? 1.0 : 0.0;
        return nd;
    };
}

Predictor identity_predictor() {
    return [](const Sample& s) {
        if (s.image.channels == 0) throw Error(ErrorCode::ShapeMismatch, "image has no channels");
        const auto ch = s.image.channel(0);
        std::vector<double> p(ch.begin(), ch.end());
        for (double& v : p) v = std::clamp(v, 0.0, 1.0);
        return p;
    };
}

Predictor constant_predictor(double p) {
    return [p](const Sample& s) { return std::vector<double>(s.validity.size(), p); };
}

Predictor truth_predictor() {
    return [](const Sample& s) {
        if (!s.mask) throw Error(ErrorCode::InvalidArgument, "truth predictor needs a mask");
        return std::vector<double>(s.mask->data.begin(), s.mask->data.end());
    };
}

MetricsReport evaluate(const Predictor& predictor, const DatasetExpr& e_val, std::size_t chip_px,
                       std::size_t stride_px) {
    if (!e_val.has_mask()) throw Error(ErrorCode::InvalidArgument, "evaluation data needs a mask layer");
    const GridWindow extent = grid_extent(e_val);
    const auto cols = grid_origins(extent.width, chip_px, stride_px);
    const auto rows = grid_origins(extent.height, chip_px, stride_px);
    // Owned span of chip i along one axis.
    const auto owned = [chip_px](const std::vector<std::size_t>& o, std::size_t i) {
        return i + 1 < o.size() ? std::min(chip_px, o[i + 1] - o[i]) : chip_px;
    };
    const std::size_t n = cols.size() * rows.size();
    std::vector<MetricsReport> partial(n);
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const std::size_t ri = uk / cols.size();
        const std::size_t ci = uk % cols.size();
        try {
            const Sample s = e_val.materialize(GridWindow{static_cast<std::int64_t>(cols[ci]),
                                                          static_cast<std::int64_t>(rows[ri]),
                                                          chip_px, chip_px});
            const auto p = predictor(s);
            const std::size_t h = owned(rows, ri);
            const std::size_t w = owned(cols, ci);
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < w; ++c) {
                    const std::size_t t = r * chip_px + c;
                    if (s.validity.data[t]) partial[uk].add(is_water(p[t]), s.mask->data[t] == 1);
                }
        } catch (...) {
            errors[uk] = std::current_exception();
        }
    }
    MetricsReport out;
    for (std::size_t k = 0; k < n; ++k) {
        if (errors[k]) std::rethrow_exception(errors[k]);
        out.merge(partial[k]);
    }
    return out;
}

json ModelFile::to_json() const {
    return {{"version", kModelVersion},
            {"model", "logistic"},
            {"channels", weights.channels},
            {"w", weights.w},
            {"b", weights.b},
            {"train_config", config.to_json()},
            {"rng", std::string(kRngName)},
            {"band_schema", prep.schema.names()},
            {"reflectance_factor", prep.reflectance_factor},
            {"stats_ref", stats_checksum(prep.stats)},
            {"stats", prep.stats.to_json()},
            {"epoch_loss", epoch_loss}};
}

ModelFile ModelFile::from_json(const json& j) {
    ModelFile m;
    try {
        if (j.at("version").get<int>() != kModelVersion)
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("unsupported model version {}", j.at("version").dump()));
        m.weights.channels = j.at("channels").get<std::vector<std::string>>();
        m.weights.w = j.at("w").get<std::vector<double>>();
        m.weights.b = j.at("b").get<double>();
        m.config = TrainConfig::from_json(j.at("train_config"));
        m.prep.schema = BandSchema(j.at("band_schema").get<std::vector<std::string>>());
        m.prep.reflectance_factor = j.at("reflectance_factor").get<double>();
        m.prep.stats = BandStats::from_json(j.at("stats"));
        if (j.contains("epoch_loss")) m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
        if (j.at("stats_ref").get<std::string>() != stats_checksum(m.prep.stats))
            throw Error(ErrorCode::InvalidArgument, "stats_ref does not match embedded stats");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("bad model JSON: {}", e.what()));
    }
    if (m.weights.w.size() != m.weights.channels.size() ||
        m.weights.w.size() != m.prep.stats.channels())
        throw Error(ErrorCode::ShapeMismatch, "model weights, channels and stats disagree in length");
    for (double v : m.weights.w)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite model weight");
    return m;
}

void save_model(const std::filesystem::path& path, const ModelFile& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("{}: cannot write model", path.string()));
    out << m.to_json().dump(2) << '\n';
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("{}: cannot open model", path.string()));
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("{}: {}", path.string(), e.what()));
    }
    return ModelFile::from_json(j);
}

}  // namespace geochip
