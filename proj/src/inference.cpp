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
#include "geochip/inference.hpp"

#include <array>
#include <exception>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <png.h>

#include "geochip/error.hpp"
#include "geochip/geotiff.hpp"
#include "geochip/samplers.hpp"

namespace geochip {

namespace {

constexpr std::size_t kPatchGroup = 8;

}  // namespace

SceneGrid scene_grid(const DatasetExpr& scene) {
    const GridWindow ext = grid_extent(scene);
    const BoundingBox& b = scene.bounds();
    const double res = scene.target_res();
    return {GeoTransform{b.minx, b.maxy, res, -res}, scene.target_crs(), ext.height, ext.width};
}

BlendAccumulator::BlendAccumulator(SceneGrid grid)
    : grid_(grid),
      mean_(grid.height, grid.width),
      count_(grid.height, grid.width),
      coverage_(grid.height, grid.width) {}

void BlendAccumulator::add(std::size_t col0, std::size_t row0, std::size_t height, std::size_t width,
                           const std::vector<double>& prob, const ValidityPlane& valid) {
    if (row0 + height > grid_.height || col0 + width > grid_.width)
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("patch at ({}, {}) of {}x{} exceeds the {}x{} scene", col0, row0,
                                width, height, grid_.width, grid_.height));
    if (prob.size() != height * width || valid.size() != height * width)
        throw Error(ErrorCode::ShapeMismatch, "patch probability/validity size mismatch");
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t t = r * width + c;
            ++coverage_(row0 + r, col0 + c);
            if (!valid.data[t]) continue;
            const std::uint32_t k = ++count_(row0 + r, col0 + c);
            double& m = mean_(row0 + r, col0 + c);
            m += (prob[t] - m) / static_cast<double>(k);
        }
}

Plane<std::uint8_t> ScenePrediction::classes() const {
    Plane<std::uint8_t> out(grid.height, grid.width, kPredictionNodata);
    for (std::size_t t = 0; t < out.size(); ++t)
        if (validity.data[t]) out.data[t] = is_water(probability.data[t]) ? 1 : 0;
    return out;
}

ScenePrediction predict_scene(const DatasetExpr& scene, const Predictor& predictor,
                              std::size_t patch_px, std::size_t stride_px) {
    if (patch_px == 0 || stride_px == 0)
        throw Error(ErrorCode::InvalidArgument, "patch and stride must be >= 1");
    if (stride_px > patch_px)
        throw Error(ErrorCode::StrideExceedsPatch,
                    fmt::format("stride {} exceeds patch {}", stride_px, patch_px));
    BlendAccumulator acc(scene_grid(scene));
    const auto cols = grid_origins(acc.grid().width, patch_px, stride_px);
    const auto rows = grid_origins(acc.grid().height, patch_px, stride_px);
    const std::size_t n = cols.size() * rows.size();

    for (std::size_t g0 = 0; g0 < n; g0 += kPatchGroup) {
        const std::size_t g = std::min(kPatchGroup, n - g0);
        std::vector<Sample> samples(g);
        std::vector<std::vector<double>> probs(g);
        std::vector<std::exception_ptr> errors(g);
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(g); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const std::size_t k = g0 + ui;
            try {
                samples[ui] = scene.materialize(GridWindow{static_cast<std::int64_t>(cols[k % cols.size()]),
                                                           static_cast<std::int64_t>(rows[k / cols.size()]),
                                                           patch_px, patch_px});
                probs[ui] = predictor(samples[ui]);
                if (probs[ui].size() != patch_px * patch_px)
                    throw Error(ErrorCode::ShapeMismatch, "predictor returned the wrong pixel count");
            } catch (...) {
                errors[ui] = std::current_exception();
            }
        }
        for (std::size_t i = 0; i < g; ++i) {
            if (errors[i]) std::rethrow_exception(errors[i]);
            const std::size_t k = g0 + i;
            acc.add(cols[k % cols.size()], rows[k / cols.size()], patch_px, patch_px, probs[i],
                    samples[i].validity);
        }
    }

    ScenePrediction out;
    out.grid = acc.grid();
    out.probability = acc.probability();
    out.count = acc.count();
    out.coverage = acc.coverage();
    out.validity = ValidityPlane(out.grid.height, out.grid.width);
    for (std::size_t t = 0; t < out.count.size(); ++t) out.validity.data[t] = out.count.data[t] > 0;
    return out;
}

void export_prediction(const ScenePrediction& p, const std::filesystem::path& path) {
    const auto cls = p.classes();
    Image img(1, cls.height, cls.width);
    std::copy(cls.data.begin(), cls.data.end(), img.data.begin());
    WriteOptions opt;
    opt.sample_type = SampleType::UInt8;
    opt.nodata = kPredictionNodata;
    opt.compression = Compression::Deflate;
    write_geotiff(path, img, p.grid.transform, p.grid.crs, opt);
}

void quicklook(const Plane<std::uint8_t>& classes, const std::filesystem::path& path) {
    static constexpr std::array<std::uint8_t, 3> kWater = {30, 90, 220};
    static constexpr std::array<std::uint8_t, 3> kLand = {128, 128, 128};
    static constexpr std::array<std::uint8_t, 3> kNodata = {0, 0, 0};

    std::vector<std::uint8_t> rgb;
    rgb.reserve(classes.size() * 3);
    for (std::uint8_t v : classes.data) {
        const auto& c = v == 1 ? kWater : v == 0 ? kLand : kNodata;
        rgb.insert(rgb.end(), c.begin(), c.end());
    }
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(classes.width);
    img.height = static_cast<png_uint_32>(classes.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, rgb.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw Error(ErrorCode::IoError, fmt::format("{}: {}", path.string(), msg));
    }
}

}  // namespace geochip
