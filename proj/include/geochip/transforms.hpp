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

// Chip preprocessing: reflectance scaling, spectral indices and per-channel
// normalization, plus the statistics that drive the latter.
//
//   DN --scale--> reflectance --append_indices--> 9 channels --normalize--> model input

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geochip/datasets.hpp"
#include "geochip/image.hpp"

namespace geochip {

inline constexpr double kDefaultReflectanceFactor = 1.0 / 10000.0;
inline constexpr double kStdFloor = 1e-6;
inline constexpr int kStatsVersion = 1;

/// Base band names in image channel order. Roles used by the indices are
/// blue, green, red, nir, swir1, swir2.
class BandSchema {
public:
    BandSchema();
    /// Throws Error(InvalidArgument) unless there are six unique names, and
    /// Error(UnknownBand) if a required role is missing.
    explicit BandSchema(std::vector<std::string> names);

    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }
    /// Throws Error(UnknownBand).
    std::size_t index(std::string_view role) const;

    /// Base names followed by the appended index names.
    std::vector<std::string> channel_names() const;

private:
    std::vector<std::string> names_;
};

struct SpectralIndex {
    std::string name;
    std::string band_a;
    std::string band_b;
};

/// ndwi_nir = nd(green, nir), ndwi_swir2 = nd(green, swir2), ndvi = nd(nir, red).
const std::vector<SpectralIndex>& default_indices();

struct BandStats {
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> stds;
    std::uint64_t n_pixels = 0;

    std::size_t channels() const noexcept { return means.size(); }

    nlohmann::json to_json() const;
    /// Throws Error(InvalidArgument) on schema problems.
    static BandStats from_json(const nlohmann::json& j);

    friend bool operator==(const BandStats&, const BandStats&) = default;
};

/// Hex FNV-1a digest of the canonical JSON form.
std::string stats_checksum(const BandStats& s);

/// Welford mean/variance over valid pixels; accumulators merge with Chan's
/// parallel formula.
class StatsAccumulator {
public:
    explicit StatsAccumulator(std::size_t channels);

    void add(const Image& img, const ValidityPlane& valid);
    void add_pixel(std::span<const double> values);
    void merge(const StatsAccumulator& other);

    std::uint64_t count() const noexcept { return n_; }
    /// Population std floored at kStdFloor. Throws Error(NoValidPixels).
    BandStats finish(std::vector<std::string> names) const;

private:
    std::uint64_t n_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Multiplies valid pixels by factor. Throws Error(InvalidArgument) unless factor > 0.
void scale_reflectance(Image& img, const ValidityPlane& valid,
                       double factor = kDefaultReflectanceFactor);

/// (a - b) / (a + b) for two channels of img, 0 where a + b == 0.
/// Throws Error(UnknownBand).
Plane<double> normalized_difference(const Image& img, const BandSchema& schema,
                                    std::string_view band_a, std::string_view band_b);

/// Appends the default indices after the base channels, which are left untouched.
/// Throws Error(UnknownBand) when the image lacks the schema's base channels.
Image append_indices(const Image& img, const BandSchema& schema);

/// Appends `extra` channels with mean 0 and std 1.
BandStats pad_stats(const BandStats& s, std::size_t extra, std::vector<std::string> extra_names = {});

/// (x - mean) / std on valid pixels. Throws Error(ShapeMismatch).
void normalize(Image& img, const ValidityPlane& valid, const BandStats& stats);

struct StatsOptions {
    BandSchema schema;
    double reflectance_factor = kDefaultReflectanceFactor;
    bool with_indices = false;
    /// Chips materialized concurrently per round.
    std::size_t group = 8;
};

/// Streaming statistics of the scaled (and optionally index-augmented) image
/// channels over all valid pixels of the chips at `boxes`. Per-chip
/// accumulators are merged in box order. Throws Error(NoValidPixels).
BandStats compute_band_stats(const DatasetExpr& e, std::span<const BoundingBox> boxes,
                             const StatsOptions& opt = {});

/// The full chain applied to a sample: scale, append indices, normalize.
/// `stats` must cover base plus index channels.
struct Preprocess {
    BandSchema schema;
    double reflectance_factor = kDefaultReflectanceFactor;
    BandStats stats;
};
Image preprocess(const Sample& s, const Preprocess& p);

}  // namespace geochip
