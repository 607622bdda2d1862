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

// Whole-scene prediction on a grid of (possibly overlapping) patches.

#include <cstdint>
#include <filesystem>

#include "geochip/datasets.hpp"
#include "geochip/geodesy.hpp"
#include "geochip/model.hpp"

namespace geochip {

inline constexpr std::uint8_t kPredictionNodata = 255;

/// The snapped target grid of a scene expression.
struct SceneGrid {
    GeoTransform transform;
    CrsCode crs = CrsCode::world_mercator();
    std::size_t height = 0;
    std::size_t width = 0;
};

SceneGrid scene_grid(const DatasetExpr& scene);

/// Per-pixel mean of patch probabilities. `coverage` counts every patch over
/// a pixel; `count` only those where the pixel was valid and so contributed.
class BlendAccumulator {
public:
    explicit BlendAccumulator(SceneGrid grid);

    /// Adds a patch whose top-left is (col0, row0) on the scene grid.
    void add(std::size_t col0, std::size_t row0, std::size_t height, std::size_t width,
             const std::vector<double>& prob, const ValidityPlane& valid);

    const SceneGrid& grid() const noexcept { return grid_; }
    const Plane<double>& probability() const noexcept { return mean_; }
    const Plane<std::uint32_t>& count() const noexcept { return count_; }
    const Plane<std::uint32_t>& coverage() const noexcept { return coverage_; }

private:
    SceneGrid grid_;
    Plane<double> mean_;
    Plane<std::uint32_t> count_;
    Plane<std::uint32_t> coverage_;
};

struct ScenePrediction {
    SceneGrid grid;
    Plane<double> probability;  // 0 where invalid
    ValidityPlane validity;
    Plane<std::uint32_t> count;
    Plane<std::uint32_t> coverage;

    /// 0 land, 1 water, kPredictionNodata where invalid.
    Plane<std::uint8_t> classes() const;
};

/// Runs `predictor` over grid_sampler(scene, patch, stride) and blends the
/// patches by arithmetic mean. Patches are predicted concurrently and merged
/// in sampler order. Throws Error(StrideExceedsPatch) when stride > patch.
ScenePrediction predict_scene(const DatasetExpr& scene, const Predictor& predictor,
                              std::size_t patch_px = 512, std::size_t stride_px = 256);

/// uint8 GeoTIFF of classes() on the scene grid, nodata 255. Throws Error(IoError).
void export_prediction(const ScenePrediction& p, const std::filesystem::path& path);

/// 8-bit RGB PNG: water blue, land gray, nodata black. Throws Error(IoError).
void quicklook(const Plane<std::uint8_t>& classes, const std::filesystem::path& path);

}  // namespace geochip
