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
#include "geochip/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <fmt/format.h>

#include "geochip/error.hpp"
#include "geochip/random.hpp"

namespace geochip {

namespace {

constexpr double kEps = 1e-6;

struct RegionPositions {
    std::int64_t col_min = 0;
    std::int64_t row_min = 0;
    std::uint64_t cols = 0;
    std::uint64_t rows = 0;

    std::uint64_t count() const noexcept { return cols * rows; }
};

}  // namespace

std::vector<BoundingBox> random_sampler(const DatasetExpr& e, ChipSpec chip, std::size_t length,
                                        std::uint64_t seed) {
    if (chip.size_px == 0) throw Error(ErrorCode::InvalidArgument, "chip size must be >= 1");
    if (length == 0) throw Error(ErrorCode::InvalidArgument, "sampler length must be >= 1");
    const double res = e.target_res();
    const double ax = e.bounds().minx;
    const double ay = e.bounds().maxy;
    const auto size = static_cast<double>(chip.size_px);

    std::vector<RegionPositions> regions;
    std::uint64_t total = 0;
    for (const BoundingBox& r : e.sampling_regions()) {
        RegionPositions p;
        p.col_min = static_cast<std::int64_t>(std::ceil((r.minx - ax) / res - kEps));
        const auto col_max = static_cast<std::int64_t>(std::floor((r.maxx - ax) / res - size + kEps));
        p.row_min = static_cast<std::int64_t>(std::ceil((ay - r.maxy) / res - kEps));
        const auto row_max = static_cast<std::int64_t>(std::floor((ay - r.miny) / res - size + kEps));
        if (col_max >= p.col_min && row_max >= p.row_min) {
            p.cols = static_cast<std::uint64_t>(col_max - p.col_min + 1);
            p.rows = static_cast<std::uint64_t>(row_max - p.row_min + 1);
        }
        total += p.count();
        regions.push_back(p);
    }
    if (total == 0)
        throw Error(ErrorCode::ChipTooLarge,
                    fmt::format("no sampling region can hold a {} px chip", chip.size_px));

    Rng rng(seed);
    std::vector<BoundingBox> out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        std::uint64_t k = rng.below(total);
        std::size_t r = 0;
        while (k >= regions[r].count()) k -= regions[r++].count();
        const RegionPositions& p = regions[r];
        const auto col = p.col_min + static_cast<std::int64_t>(k % p.cols);
        const auto row = p.row_min + static_cast<std::int64_t>(k / p.cols);
        out.push_back(e.window_box({col, row, chip.size_px, chip.size_px}));
    }
    return out;
}

std::vector<std::size_t> grid_origins(std::size_t extent_px, std::size_t size_px,
                                      std::size_t stride_px) {
    if (stride_px < 1 || stride_px > size_px)
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("stride {} must lie in [1, {}]", stride_px, size_px));
    if (extent_px < size_px)
        throw Error(ErrorCode::ChipTooLarge,
                    fmt::format("extent of {} px cannot hold a {} px chip", extent_px, size_px));
    std::vector<std::size_t> origins;
    std::size_t o = 0;
    for (; o + size_px <= extent_px; o += stride_px) origins.push_back(o);
    if (origins.back() + size_px < extent_px) origins.push_back(extent_px - size_px);
    return origins;
}

GridWindow grid_extent(const DatasetExpr& e) {
    const BoundingBox& b = e.bounds();
    const double res = e.target_res();
    const auto w = static_cast<std::size_t>(std::ceil(b.width() / res - kEps));
    const auto h = static_cast<std::size_t>(std::ceil(b.height() / res - kEps));
    return {0, 0, std::max<std::size_t>(w, 1), std::max<std::size_t>(h, 1)};
}

std::vector<BoundingBox> grid_sampler(const DatasetExpr& e, ChipSpec chip, std::size_t stride_px) {
    const GridWindow extent = grid_extent(e);
    const auto cols = grid_origins(extent.width, chip.size_px, stride_px);
    const auto rows = grid_origins(extent.height, chip.size_px, stride_px);
    std::vector<BoundingBox> out;
    out.reserve(cols.size() * rows.size());
    for (std::size_t r : rows)
        for (std::size_t c : cols)
            out.push_back(e.window_box({static_cast<std::int64_t>(c), static_cast<std::int64_t>(r),
                                        chip.size_px, chip.size_px}));
    return out;
}

Image Batch::image(std::size_t i) const {
    Image img(channels, height, width);
    const std::size_t n_values = channels * pixels();
    std::copy_n(images.begin() + static_cast<std::ptrdiff_t>(i * n_values), n_values, img.data.begin());
    return img;
}

MaskPlane Batch::mask(std::size_t i) const {
    MaskPlane m(height, width);
    if (masks)
        std::copy_n(masks->begin() + static_cast<std::ptrdiff_t>(i * pixels()), pixels(), m.data.begin());
    return m;
}

ValidityPlane Batch::valid(std::size_t i) const {
    ValidityPlane v(height, width);
    std::copy_n(validity.begin() + static_cast<std::ptrdiff_t>(i * pixels()), pixels(), v.data.begin());
    return v;
}

Batch stack_samples(std::span<const Sample> samples) {
    if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "cannot stack an empty sample list");
    const Sample& first = samples.front();
    Batch b;
    b.n = samples.size();
    b.channels = first.image.channels;
    b.height = first.validity.height;
    b.width = first.validity.width;
    const bool with_mask = first.mask.has_value();
    for (const Sample& s : samples) {
        if (s.image.channels != b.channels || s.validity.height != b.height ||
            s.validity.width != b.width || s.image.height != b.height || s.image.width != b.width)
            throw Error(ErrorCode::ShapeMismatch,
                        fmt::format("sample shape [{}][{}][{}] differs from [{}][{}][{}]",
                                    s.image.channels, s.validity.height, s.validity.width,
                                    b.channels, b.height, b.width));
        if (s.mask.has_value() != with_mask)
            throw Error(ErrorCode::ShapeMismatch, "samples disagree on mask presence");
    }
    b.images.reserve(b.n * b.channels * b.pixels());
    b.validity.reserve(b.n * b.pixels());
    if (with_mask) b.masks.emplace().reserve(b.n * b.pixels());
    for (const Sample& s : samples) {
        b.images.insert(b.images.end(), s.image.data.begin(), s.image.data.end());
        b.validity.insert(b.validity.end(), s.validity.data.begin(), s.validity.data.end());
        if (with_mask) b.masks->insert(b.masks->end(), s.mask->data.begin(), s.mask->data.end());
        b.bboxes.push_back(s.bbox);
    }
    return b;
}

std::vector<Sample> materialize_all(const DatasetExpr& e, std::span<const BoundingBox> boxes) {
    std::vector<Sample> out(boxes.size());
    std::vector<std::exception_ptr> errors(boxes.size());
    const auto n = static_cast<std::ptrdiff_t>(boxes.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        try {
            out[ui] = e.materialize(boxes[ui]);
        } catch (...) {
            errors[ui] = std::current_exception();
        }
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    return out;
}

}  // namespace geochip
