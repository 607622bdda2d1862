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

// Lazy composition of georeferenced rasters.
//
//   auto imagery = a | b;          // virtual mosaic, left operand wins overlaps
//   auto paired  = imagery & mask; // sample only where both exist
//   Sample s = paired.materialize(box);
//
// Expressions are immutable and hold no pixel data; all reads happen in
// materialize, which is safe to call from many threads at once.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "geochip/geodesy.hpp"
#include "geochip/geotiff.hpp"
#include "geochip/image.hpp"

namespace geochip {

enum class LayerKind { Image, Mask };

std::string_view to_string(LayerKind k) noexcept;
LayerKind layer_kind_from(std::string_view s);

struct RasterLayer {
    Raster raster;
    LayerKind kind = LayerKind::Image;
    BoundingBox bounds_native;

    const RasterHeader& header() const noexcept { return raster.header(); }
    const std::filesystem::path& path() const noexcept { return raster.path(); }
};

/// Opens the header only. Throws Error(InvalidMask) for multi-band masks.
RasterLayer build_layer(const std::filesystem::path& path, LayerKind kind);

/// An aligned chip. Invalid pixels hold 0 in every image channel and the mask.
struct Sample {
    Image image;
    std::optional<MaskPlane> mask;
    BoundingBox bbox;
    ValidityPlane validity;
};

/// Pixel window on an expression's target grid, relative to the grid anchor
/// (bounds().minx, bounds().maxy). Rows grow southward.
struct GridWindow {
    std::int64_t col0 = 0;
    std::int64_t row0 = 0;
    std::size_t width = 0;
    std::size_t height = 0;
};

class DatasetExpr {
public:
    static DatasetExpr leaf(RasterLayer layer, CrsCode target_crs, double target_res);

    /// Virtual mosaic. Throws Error(SchemaMismatch) unless both sides share
    /// target grid and channel schema.
    friend DatasetExpr operator|(const DatasetExpr& a, const DatasetExpr& b);
    /// Paired domain. Throws Error(EmptyIntersection) when bounds do not
    /// overlap, Error(SchemaMismatch) on grid mismatch or two mask sides.
    friend DatasetExpr operator&(const DatasetExpr& a, const DatasetExpr& b);

    CrsCode target_crs() const noexcept;
    double target_res() const noexcept;
    /// Hull (union) / intersection of leaf bounds reprojected to the target CRS.
    const BoundingBox& bounds() const noexcept;

    std::size_t image_channels() const noexcept;
    bool has_mask() const noexcept;

    /// Areas a random chip may be drawn from: the members of a top-level
    /// union, or the whole expression otherwise.
    std::vector<BoundingBox> sampling_regions() const;

    /// Leaves in left-to-right order.
    std::vector<const RasterLayer*> leaves() const;

    /// True when some leaf or union member could contribute pixels to q.
    bool intersects(const BoundingBox& q) const;

    /// Snaps q outward to the target grid anchored at bounds().minx/maxy.
    GridWindow snap(const BoundingBox& q) const;
    BoundingBox window_box(const GridWindow& w) const;

    /// Throws Error(NoOverlap) when q misses bounds().
    Sample materialize(const BoundingBox& q) const;
    Sample materialize(const GridWindow& w) const;

private:
    struct Node;
    explicit DatasetExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

inline DatasetExpr unite(const DatasetExpr& a, const DatasetExpr& b) { return a | b; }
inline DatasetExpr intersect(const DatasetExpr& a, const DatasetExpr& b) { return a & b; }
inline BoundingBox bounds(const DatasetExpr& e) { return e.bounds(); }

/// Densification used when reprojecting leaf bounds into a target CRS.
inline constexpr int kBoundsDensify = 21;

}  // namespace geochip
