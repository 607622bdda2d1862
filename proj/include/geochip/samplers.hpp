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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geochip/datasets.hpp"

namespace geochip {

struct ChipSpec {
    std::size_t size_px = 256;

    double size_units(double res) const noexcept { return static_cast<double>(size_px) * res; }
};

/// `length` chip boxes, each inside a single sampling region of `e` and on
/// its target grid. Regions are chosen with probability proportional to the
/// number of grid-aligned chip positions they hold, so every position in the
/// corpus is equally likely. Pure function of (e, chip, length, seed).
/// Throws Error(ChipTooLarge) when no region can hold a chip.
std::vector<BoundingBox> random_sampler(const DatasetExpr& e, ChipSpec chip, std::size_t length,
                                        std::uint64_t seed);

/// Row-major sweep over bounds(e): per axis origins 0, stride, 2*stride, ...
/// plus one origin flush with the far edge when the regular ones fall short.
/// Throws Error(ChipTooLarge) if bounds(e) is smaller than a chip and
/// Error(InvalidArgument) unless 1 <= stride <= size.
std::vector<BoundingBox> grid_sampler(const DatasetExpr& e, ChipSpec chip, std::size_t stride_px);

/// Chip origins along one axis of `extent_px` pixels (exposed for tests).
std::vector<std::size_t> grid_origins(std::size_t extent_px, std::size_t size_px,
                                      std::size_t stride_px);

/// Target-grid extent of bounds(e) in whole pixels (partial edge pixels count).
GridWindow grid_extent(const DatasetExpr& e);

struct Batch {
    std::size_t n = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> images;                 // [N][C][H][W]
    std::optional<std::vector<std::int32_t>> masks;  // [N][H][W]
    std::vector<std::uint8_t> validity;         // [N][H][W]
    std::vector<BoundingBox> bboxes;

    std::size_t pixels() const noexcept { return height * width; }
    /// Copy of member i as an Image.
    Image image(std::size_t i) const;
    MaskPlane mask(std::size_t i) const;
    ValidityPlane valid(std::size_t i) const;
};

/// Throws Error(EmptyBatch) or Error(ShapeMismatch) (shapes or mask presence differ).
Batch stack_samples(std::span<const Sample> samples);

/// Materializes boxes concurrently; the result is in box order.
std::vector<Sample> materialize_all(const DatasetExpr& e, std::span<const BoundingBox> boxes);

}  // namespace geochip
