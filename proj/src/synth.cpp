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
#include "geochip/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <system_error>

#include <fmt/format.h>

#include "geochip/error.hpp"
#include "geochip/geotiff.hpp"
#include "geochip/random.hpp"
#include "geochip/transforms.hpp"

namespace geochip {

namespace {

using Spectrum = std::array<double, 6>;  // blue, green, red, nir, swir1, swir2

constexpr std::array<Spectrum, 2> kWater = {{
    {800, 900, 600, 300, 150, 100},     // clear
    {900, 1200, 1000, 700, 300, 200},   // turbid
}};
constexpr std::array<Spectrum, 3> kLand = {{
    {500, 700, 800, 2500, 2000, 1200},    // vegetation
    {900, 1100, 1300, 1900, 2500, 2100},  // bare soil
    {1100, 1150, 1200, 1500, 1700, 1600}, // built-up
}};
constexpr double kNoiseSigma = 100.0;

constexpr double kBoundaryLon = -42.0;
constexpr double kTopLat = -22.85;

struct TileGeometry {
    CrsCode crs;
    GeoTransform gt;
};

// Tiles are split into two groups on either side of the 23S/24S boundary,
// each laid out in columns of two rows.
std::vector<TileGeometry> layout(const SynthOptions& opt) {
    const double span = static_cast<double>(opt.tile_px) * opt.res;
    const std::size_t n_west = (opt.n_tiles + 1) / 2;
    std::vector<TileGeometry> out;
    for (std::size_t i = 0; i < opt.n_tiles; ++i) {
        const bool west = i < n_west;
        const std::size_t j = west ? i : i - n_west;
        const CrsCode crs = CrsCode::utm(west ? 23 : 24, true);
        const XY anchor = forward_project(crs, kBoundaryLon + (west ? -0.01 : 0.01), kTopLat);
        const double ax = std::round(anchor.x / opt.res) * opt.res;
        const double ay = std::round(anchor.y / opt.res) * opt.res;
        const auto col = static_cast<double>(j / 2);
        const auto row = static_cast<double>(j % 2);
        const double x0 = west ? ax - (col + 1) * span : ax + col * span;
        out.push_back({crs, GeoTransform{x0, ay - row * span, opt.res, -opt.res}});
    }
    return out;
}

struct Scene {
    std::size_t n;
    std::vector<std::uint8_t> water;       // 0/1
    std::vector<std::uint8_t> water_kind;  // index into kWater
    std::size_t water_count = 0;

    explicit Scene(std::size_t size) : n(size), water(size * size, 0), water_kind(size * size, 0) {}

    void set(std::size_t t, std::uint8_t kind) {
        if (!water[t]) ++water_count;
        water[t] = 1;
        water_kind[t] = kind;
    }
    double fraction() const { return static_cast<double>(water_count) / static_cast<double>(n * n); }
};

void add_disc(Scene& s, Rng& rng, std::uint8_t kind) {
    const double size = static_cast<double>(s.n);
    const double r = rng.uniform(30.0, 120.0);
    const double cx = rng.uniform(0.0, size);
    const double cy = rng.uniform(0.0, size);
    for (std::size_t y = 0; y < s.n; ++y)
        for (std::size_t x = 0; x < s.n; ++x) {
            const double dx = static_cast<double>(x) + 0.5 - cx;
            const double dy = static_cast<double>(y) + 0.5 - cy;
            if (dx * dx + dy * dy < r * r) s.set(y * s.n + x, kind);
        }
}

void add_river(Scene& s, Rng& rng, std::uint8_t kind) {
    const double size = static_cast<double>(s.n);
    const bool horizontal = rng.uniform() < 0.5;
    const double base = rng.uniform(0.15 * size, 0.85 * size);
    const double amp = rng.uniform(0.03 * size, 0.12 * size);
    const double wavelength = rng.uniform(0.5 * size, 1.5 * size);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double half_width = rng.uniform(6.0, 15.0);
    for (std::size_t y = 0; y < s.n; ++y)
        for (std::size_t x = 0; x < s.n; ++x) {
            const double along = (horizontal ? static_cast<double>(x) : static_cast<double>(y)) + 0.5;
            const double across = (horizontal ? static_cast<double>(y) : static_cast<double>(x)) + 0.5;
            const double centre = base + amp * std::sin(2.0 * std::numbers::pi * along / wavelength + phase);
            if (std::abs(across - centre) < half_width) s.set(y * s.n + x, kind);
        }
}

// Low-frequency land-cover field: three cosine waves thresholded into classes.
std::vector<std::uint8_t> land_cover(std::size_t n, Rng& rng) {
    std::array<std::array<double, 3>, 3> waves{};
    for (auto& w : waves) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double freq = rng.uniform(1.0, 3.0) * 2.0 * std::numbers::pi / static_cast<double>(n);
        w = {freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi)};
    }
    std::vector<std::uint8_t> out(n * n);
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            double v = 0;
            for (const auto& w : waves)
                v += std::cos(w[0] * static_cast<double>(x) + w[1] * static_cast<double>(y) + w[2]);
            out[y * n + x] = v < 0.8 ? 0 : v < 1.6 ? 1 : 2;
        }
    return out;
}

}  // namespace

Manifest synthesize_corpus(const std::filesystem::path& out_dir, const SynthOptions& opt) {
    if (opt.n_tiles == 0 || opt.tile_px < 16 || !(opt.res > 0))
        throw Error(ErrorCode::InvalidArgument, "synth needs >= 1 tile of >= 16 px and res > 0");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw Error(ErrorCode::IoError, fmt::format("{}: {}", out_dir.string(), ec.message()));

    const std::size_t n = opt.tile_px;
    const std::size_t plane = n * n;
    Manifest m;
    m.base_dir = out_dir;
    m.band_names = BandSchema().names();
    const auto tiles = layout(opt);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        Rng rng(derive_seed(opt.seed, fmt::format("synth/tile/{}", i)));
        const double target = rng.uniform(kSynthWaterMin, kSynthWaterMax);
        Scene scene(n);
        for (std::size_t k = 0; scene.fraction() < target; ++k) {
            const auto kind = static_cast<std::uint8_t>(rng.below(kWater.size()));
            if (k % 2 == 0)
                add_disc(scene, rng, kind);
            else
                add_river(scene, rng, kind);
        }
        const auto cover = land_cover(n, rng);

        // Odd tiles lose a triangular corner to nodata.
        std::vector<std::uint8_t> nodata(plane, 0);
        if (i % 2 == 1) {
            const std::size_t cut = n / 6;
            for (std::size_t y = 0; y < cut; ++y)
                for (std::size_t x = 0; x + y < cut; ++x) nodata[y * n + (n - 1 - x)] = 1;
        }

        Image image(6, n, n);
        Image mask(1, n, n);
        for (std::size_t t = 0; t < plane; ++t) {
            if (nodata[t]) {
                for (std::size_t b = 0; b < 6; ++b) image.data[b * plane + t] = kSynthImageNodata;
                mask.data[t] = kSynthMaskNodata;
                continue;
            }
            const Spectrum& s = scene.water[t] ? kWater[scene.water_kind[t]] : kLand[cover[t]];
            for (std::size_t b = 0; b < 6; ++b) {
                const double dn = std::round(s[b] + kNoiseSigma * rng.normal());
                image.data[b * plane + t] = std::clamp(dn, 1.0, 10000.0);
            }
            mask.data[t] = scene.water[t];
        }

        const std::string stem = fmt::format("tile_{:02d}", i);
        const std::string tile_id = fmt::format("t{:02d}", i);
        WriteOptions img_opt;
        img_opt.sample_type = SampleType::UInt16;
        img_opt.nodata = kSynthImageNodata;
        img_opt.compression = Compression::Deflate;
        write_geotiff(out_dir / (stem + "_image.tif"), image, tiles[i].gt, tiles[i].crs, img_opt);
        WriteOptions mask_opt;
        mask_opt.sample_type = SampleType::UInt8;
        mask_opt.nodata = kSynthMaskNodata;
        mask_opt.compression = Compression::Deflate;
        write_geotiff(out_dir / (stem + "_mask.tif"), mask, tiles[i].gt, tiles[i].crs, mask_opt);

        m.layers.push_back(describe_layer(build_layer(out_dir / (stem + "_image.tif"), LayerKind::Image),
                                          stem + "_image.tif", tile_id));
        m.layers.push_back(describe_layer(build_layer(out_dir / (stem + "_mask.tif"), LayerKind::Mask),
                                          stem + "_mask.tif", tile_id));
    }
    save_manifest(out_dir / "manifest.json", m);
    return m;
}

}  // namespace geochip
