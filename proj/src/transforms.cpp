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
#include "geochip/transforms.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "geochip/error.hpp"
#include "geochip/kernels.hpp"
#include "geochip/random.hpp"
#include "geochip/samplers.hpp"

namespace geochip {

using nlohmann::json;

namespace {

const std::vector<std::string> kDefaultBands = {"blue", "green", "red", "nir", "swir1", "swir2"};

}  // namespace

BandSchema::BandSchema() : names_(kDefaultBands) {}

BandSchema::BandSchema(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() != kDefaultBands.size())
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("band schema needs {} names, got {}", kDefaultBands.size(), names_.size()));
    for (std::size_t i = 0; i < names_.size(); ++i)
        for (std::size_t j = i + 1; j < names_.size(); ++j)
            if (names_[i] == names_[j])
                throw Error(ErrorCode::InvalidArgument, fmt::format("duplicate band name '{}'", names_[i]));
    for (const auto& role : kDefaultBands) index(role);
}

std::size_t BandSchema::index(std::string_view role) const {
    const auto it = std::find(names_.begin(), names_.end(), role);
    if (it == names_.end())
        throw Error(ErrorCode::UnknownBand, fmt::format("band '{}' not in schema", role));
    return static_cast<std::size_t>(it - names_.begin());
}

std::vector<std::string> BandSchema::channel_names() const {
    auto out = names_;
    for (const auto& idx : default_indices()) out.push_back(idx.name);
    return out;
}

const std::vector<SpectralIndex>& default_indices() {
    static const std::vector<SpectralIndex> indices = {
        {"ndwi_nir", "green", "nir"},
        {"ndwi_swir2", "green", "swir2"},
        {"ndvi", "nir", "red"},
    };
    return indices;
}

json BandStats::to_json() const {
    json ch = json::array();
    for (std::size_t c = 0; c < means.size(); ++c)
        ch.push_back({{"name", c < names.size() ? names[c] : fmt::format("band{}", c)},
                      {"mean", means[c]},
                      {"std", stds[c]}});
    return {{"version", kStatsVersion}, {"channels", ch}, {"n_pixels", n_pixels}};
}

BandStats BandStats::from_json(const json& j) {
    BandStats s;
    try {
        if (j.at("version").get<int>() != kStatsVersion)
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("unsupported stats version {}", j.at("version").dump()));
        for (const auto& c : j.at("channels")) {
            s.names.push_back(c.at("name").get<std::string>());
            s.means.push_back(c.at("mean").get<double>());
            s.stds.push_back(c.at("std").get<double>());
        }
        s.n_pixels = j.at("n_pixels").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("bad stats JSON: {}", e.what()));
    }
    for (double v : s.stds)
        if (!(v > 0) || !std::isfinite(v))
            throw Error(ErrorCode::InvalidArgument, "stats std must be finite and positive");
    return s;
}

std::string stats_checksum(const BandStats& s) {
    return fmt::format("fnv1a64:{:016x}", fnv1a64(s.to_json().dump()));
}

StatsAccumulator::StatsAccumulator(std::size_t channels) : mean_(channels, 0.0), m2_(channels, 0.0) {}

void StatsAccumulator::add_pixel(std::span<const double> values) {
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t c = 0; c < mean_.size(); ++c) {
        const double d = values[c] - mean_[c];
        mean_[c] += d * inv;
        m2_[c] += d * (values[c] - mean_[c]);
    }
}

void StatsAccumulator::add(const Image& img, const ValidityPlane& valid) {
    if (img.channels != mean_.size())
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("accumulator has {} channels, image {}", mean_.size(), img.channels));
    std::vector<double> px(img.channels);
    const std::size_t plane = img.pixels();
    for (std::size_t t = 0; t < plane; ++t) {
        if (!valid.data[t]) continue;
        for (std::size_t c = 0; c < img.channels; ++c) px[c] = img.data[c * plane + t];
        add_pixel(px);
    }
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    for (std::size_t c = 0; c < mean_.size(); ++c) {
        const double d = other.mean_[c] - mean_[c];
        mean_[c] += d * (nb / n);
        m2_[c] += other.m2_[c] + d * d * (na * nb / n);
    }
    n_ += other.n_;
}

BandStats StatsAccumulator::finish(std::vector<std::string> names) const {
    if (n_ == 0) throw Error(ErrorCode::NoValidPixels, "no valid pixels for statistics");
    BandStats s;
    s.names = std::move(names);
    s.means = mean_;
    s.n_pixels = n_;
    for (double m2 : m2_)
        s.stds.push_back(std::max(std::sqrt(std::max(m2, 0.0) / static_cast<double>(n_)), kStdFloor));
    return s;
}

void scale_reflectance(Image& img, const ValidityPlane& valid, double factor) {
    if (!(factor > 0)) throw Error(ErrorCode::InvalidArgument, "reflectance factor must be > 0");
    const std::size_t plane = img.pixels();
    for (std::size_t c = 0; c < img.channels; ++c)
        for (std::size_t t = 0; t < plane; ++t)
            if (valid.data[t]) img.data[c * plane + t] *= factor;
}

Plane<double> normalized_difference(const Image& img, const BandSchema& schema,
                                    std::string_view band_a, std::string_view band_b) {
    const std::size_t a = schema.index(band_a);
    const std::size_t b = schema.index(band_b);
    if (std::max(a, b) >= img.channels)
        throw Error(ErrorCode::UnknownBand,
                    fmt::format("image has {} channels, band index {} requested", img.channels,
                                std::max(a, b)));
    Plane<double> out(img.height, img.width);
    kernels::normalized_difference(img.channel(a), img.channel(b), out.data);
    return out;
}

Image append_indices(const Image& img, const BandSchema& schema) {
    if (img.channels < schema.size())
        throw Error(ErrorCode::UnknownBand,
                    fmt::format("image has {} channels, schema needs {}", img.channels, schema.size()));
    const auto& indices = default_indices();
    Image out(img.channels + indices.size(), img.height, img.width);
    std::copy(img.data.begin(), img.data.end(), out.data.begin());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto nd = normalized_difference(img, schema, indices[k].band_a, indices[k].band_b);
        std::copy(nd.data.begin(), nd.data.end(), out.channel(img.channels + k).begin());
    }
    return out;
}

BandStats pad_stats(const BandStats& s, std::size_t extra, std::vector<std::string> extra_names) {
    BandStats out = s;
    for (std::size_t k = 0; k < extra; ++k) {
        out.names.push_back(k < extra_names.size() ? extra_names[k]
                                                   : fmt::format("band{}", s.channels() + k));
        out.means.push_back(0.0);
        out.stds.push_back(1.0);
    }
    return out;
}

void normalize(Image& img, const ValidityPlane& valid, const BandStats& stats) {
    if (img.channels != stats.channels())
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("image has {} channels, stats {}", img.channels, stats.channels()));
    kernels::normalize(img, valid, stats.means, stats.stds);
}

BandStats compute_band_stats(const DatasetExpr& e, std::span<const BoundingBox> boxes,
                             const StatsOptions& opt) {
    if (e.image_channels() != opt.schema.size())
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("dataset has {} image channels, schema {}", e.image_channels(),
                                opt.schema.size()));
    auto names = opt.with_indices ? opt.schema.channel_names() : opt.schema.names();
    StatsAccumulator total(names.size());
    const std::size_t group = std::max<std::size_t>(opt.group, 1);
    for (std::size_t i = 0; i < boxes.size(); i += group) {
        const auto chunk = boxes.subspan(i, std::min(group, boxes.size() - i));
        auto samples = materialize_all(e, chunk);
        for (Sample& s : samples) {
            scale_reflectance(s.image, s.validity, opt.reflectance_factor);
            StatsAccumulator acc(names.size());
            acc.add(opt.with_indices ? append_indices(s.image, opt.schema) : s.image, s.validity);
            total.merge(acc);
        }
    }
    return total.finish(std::move(names));
}

Image preprocess(const Sample& s, const Preprocess& p) {
    Image img = s.image;
    scale_reflectance(img, s.validity, p.reflectance_factor);
    Image out = append_indices(img, p.schema);
    normalize(out, s.validity, p.stats);
    return out;
}

}  // namespace geochip
