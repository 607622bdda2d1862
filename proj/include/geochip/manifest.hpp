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

// Layer manifest, persisted as
//
//   {"version": 1,
//    "band_names": ["blue", ...],            // optional
//    "layers": [{"path", "kind", "epsg", "bounds": [minx, miny, maxx, maxy],
//                "bands", "tile"}]}
//
// Paths are relative to the manifest's directory. Layers sharing a "tile" id
// are paired (image & mask); tiles keep their first-appearance order, which
// is what the train/validation split counts along.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geochip/datasets.hpp"

namespace geochip {

inline constexpr int kManifestVersion = 1;

struct ManifestLayer {
    std::filesystem::path path;  // as written (relative or absolute)
    LayerKind kind = LayerKind::Image;
    int epsg = 0;
    BoundingBox bounds;
    std::uint32_t bands = 0;
    std::string tile;
};

struct Manifest {
    std::vector<std::string> band_names;
    std::vector<ManifestLayer> layers;
    std::filesystem::path base_dir;

    std::vector<std::string> tile_ids() const;
    std::filesystem::path resolve(const ManifestLayer& l) const;
};

/// Throws Error(InvalidManifest) for schema problems, Error(IoError) when unreadable.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& m);

/// Describes an opened layer for a manifest entry.
ManifestLayer describe_layer(const RasterLayer& layer, std::filesystem::path relative_path,
                             std::string tile);

/// The expression for one tile: its image layers unioned, intersected with
/// its mask when present.
DatasetExpr tile_expr(const Manifest& m, const std::string& tile, CrsCode crs, double res);

/// Union of tile_expr over the given tiles, in order. Throws
/// Error(InvalidArgument) for an empty list.
DatasetExpr corpus_expr(const Manifest& m, const std::vector<std::string>& tiles, CrsCode crs,
                        double res);

}  // namespace geochip
